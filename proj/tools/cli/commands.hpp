#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nnssgd/completion.hpp"

namespace nnssgd::cli {

inline constexpr const char* kVersion = "0.1.0";

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Runs the command line `args` (args[0] is the program name) with the given
/// standard streams and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Prediction for internal indices that may lie outside the model (IDs never
/// seen in training). Unknown rows or columns drop the low-rank term and use
/// the global mean for the missing side of the mean offset.
double predict_or_fallback(const CompletionModel& model, std::size_t i, std::size_t j);

/// Median wall time of one SSGD iteration (probe, subgradient, update) on a
/// random m x n problem at rank r with probe width k.
double median_iteration_seconds(std::size_t m, std::size_t n, std::size_t rank, std::size_t k,
                                std::size_t iterations, std::uint64_t seed, std::size_t threads = 1);

/// Side files written next to a model.
std::string idmap_path(const std::string& model_path);
std::string manifest_path(const std::string& artifact_path);

}  // namespace nnssgd::cli
