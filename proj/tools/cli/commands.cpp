#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string_view>

#include "CLI11.hpp"
#include "json.hpp"
#include "nnssgd/atomic_file.hpp"
#include "nnssgd/errors.hpp"
#include "nnssgd/model_io.hpp"
#include "nnssgd/ratings_io.hpp"
#include "nnssgd/rng.hpp"
#include "nnssgd/synthetic.hpp"

namespace nnssgd::cli {
namespace {

using Json = nlohmann::ordered_json;

struct FileBlob {
  std::string path;
  std::string bytes;
};

FileBlob read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw DataError("cannot read '" + path + "'");
  return {path, buffer.str()};
}

std::string digest(const std::string& bytes) {
  const auto sum = fnv1a64({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
  char text[17];
  std::snprintf(text, sizeof text, "%016" PRIx64, sum);
  return text;
}

Json describe_input(const FileBlob& blob) {
  return Json{{"path", blob.path}, {"bytes", blob.bytes.size()}, {"fnv1a64", digest(blob.bytes)}};
}

std::string shortest(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string ten_digits(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.10g", value);
  return buffer;
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomically(path, [&](std::ostream& out) { out << text; });
}

// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text(path, text);
  }
}

std::size_t resolve_threads(const std::optional<std::size_t>& flag) {
  if (flag) {
    if (*flag < 1) throw InvalidArgument("--threads must be at least 1");
    return *flag;
  }
  const char* env = std::getenv("NNSSGD_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  std::size_t value = 0;
  const std::string_view text(env);
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || value < 1) {
    throw InvalidArgument("NNSSGD_THREADS must be a positive integer, got '" + std::string(text) + "'");
  }
  return value;
}

IdMap load_idmap_for(const std::string& model_path, const CompletionModel& model) {
  const std::string path = idmap_path(model_path);
  if (!std::filesystem::exists(path)) return IdMap::sequential(model.rows(), model.cols());
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  IdMap ids = IdMap::read(in);
  if (ids.rows() != model.rows() || ids.cols() != model.cols()) {
    throw DataError("id map '" + path + "' does not match the model dimensions");
  }
  return ids;
}

SparseObservations parse_ratings(const FileBlob& blob, const RatingsFormat& format, IdMap& ids) {
  std::istringstream in(blob.bytes);
  try {
    return load_ratings(in, format, ids);
  } catch (const DataError& err) {
    throw DataError(blob.path + ": " + err.what());
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string train_path;
  std::string test_path;
  std::size_t rank = 11;
  std::size_t super_iters = 10;
  double delta = 0.015;
  double nu = 0.005;
  std::optional<std::size_t> k;
  std::string probe = "columns";
  std::string loss = "squared";
  bool masked = true;
  bool center = true;
  std::uint64_t seed = 1;
  std::string model_out;
  std::string metrics_out;
  std::optional<std::size_t> threads;
  std::size_t metrics_every = 1;
  std::string scaling = "consistent";
  bool iid_columns = false;
  bool return_best = false;
  bool no_timing = false;
  bool lenient = false;
};

ProbeScaling parse_scaling(const std::string& name) {
  if (name == "consistent") return ProbeScaling::consistent;
  if (name == "printed") return ProbeScaling::printed;
  throw InvalidArgument("unknown probe scaling '" + name + "' (expected consistent or printed)");
}

std::string csv_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.super_iteration) + "," + std::to_string(r.iteration) + "," +
                    shortest(r.wall_seconds) + "," + shortest(r.objective) + "," +
                    shortest(r.train_rmse) + ",";
  if (r.test_rmse) row += shortest(*r.test_rmse);
  return row + "\n";
}

int cmd_train(const TrainArgs& args, std::ostream& out) {
  CompletionConfig config;
  config.rank = args.rank;
  config.super_iterations = args.super_iters;
  config.delta = args.delta;
  config.nu = args.nu;
  config.k = args.k;
  config.probe = parse_probe_kind(args.probe);
  config.draw = args.iid_columns ? ColumnDraw::with_replacement : ColumnDraw::without_replacement;
  config.loss = parse_loss_kind(args.loss);
  config.seed = args.seed;
  config.masked_residuals = args.masked;
  config.scaling = parse_scaling(args.scaling);
  config.return_best = args.return_best;
  config.metrics_every = args.metrics_every;
  config.record_wall_time = !args.no_timing;
  config.threads = resolve_threads(args.threads);

  RatingsFormat format;
  format.strict = !args.lenient;
  IdMap ids;
  const FileBlob train_blob = read_file(args.train_path);
  SparseObservations train = parse_ratings(train_blob, format, ids);
  std::optional<FileBlob> test_blob;
  std::optional<SparseObservations> test;
  if (!args.test_path.empty()) {
    test_blob = read_file(args.test_path);
    test = parse_ratings(*test_blob, format, ids);
  }
  // The test file may introduce IDs; both sets live on the combined grid.
  train = train.with_dims(ids.rows(), ids.cols());
  if (test) test = test->with_dims(ids.rows(), ids.cols());
  config.validate(train.cols());

  std::string metrics = "super_iter,iter,wall_seconds,objective,train_rmse,test_rmse\n";
  const auto sink = [&](const MetricsRecord& record) { metrics += csv_row(record); };
  const CompletionModel model = fit(train, test ? &*test : nullptr, config, sink, args.center);

  Json manifest;
  manifest["artifact"] = "nnssgd";
  manifest["version"] = kVersion;
  manifest["command"] = "train";
  manifest["config"] = Json{{"rank", config.rank},
                            {"super_iterations", config.super_iterations},
                            {"delta", config.delta},
                            {"nu", config.nu},
                            {"k", config.probe_width()},
                            {"probe", std::string(to_string(config.probe))},
                            {"column_draw", args.iid_columns ? "with_replacement" : "without_replacement"},
                            {"loss", std::string(to_string(config.loss))},
                            {"masked_residuals", config.masked_residuals},
                            {"center", args.center},
                            {"scaling", args.scaling},
                            {"return_best", config.return_best},
                            {"metrics_every", config.metrics_every},
                            {"record_wall_time", config.record_wall_time},
                            {"threads", config.threads},
                            {"strict_duplicates", format.strict},
                            {"tsvd",
                             Json{{"oversampling", config.tsvd.oversampling},
                                  {"min_power_iterations", config.tsvd.min_power_iterations},
                                  {"max_power_iterations", config.tsvd.max_power_iterations},
                                  {"tolerance", config.tsvd.tolerance},
                                  {"seed", config.tsvd.seed}}}};
  manifest["seed"] = config.seed;
  manifest["inputs"] = Json::object();
  manifest["inputs"]["train"] = describe_input(train_blob);
  if (test_blob) manifest["inputs"]["test"] = describe_input(*test_blob);
  manifest["dimensions"] = Json{{"rows", train.rows()}, {"cols", train.cols()},
                                {"train_entries", train.nnz()},
                                {"test_entries", test ? test->nnz() : 0}};
  manifest["outputs"] = Json{{"model", args.model_out}, {"metrics", args.metrics_out}};
  const std::string manifest_text = manifest.dump(2) + "\n";

  if (!args.model_out.empty()) {
    save_model_file(model, args.model_out);
    write_file_atomically(idmap_path(args.model_out), [&](std::ostream& o) { ids.write(o); });
    write_text(manifest_path(args.model_out), manifest_text);
  }
  if (!args.metrics_out.empty()) {
    write_text(args.metrics_out, metrics);
    if (args.model_out.empty()) write_text(manifest_path(args.metrics_out), manifest_text);
  }

  const double train_rmse = rmse(model, train);
  char line[160];
  if (test && !test->empty()) {
    std::snprintf(line, sizeof line, "train_rmse=%.6f test_rmse=%.6f rank=%zu\n", train_rmse,
                  rmse(model, *test), model.factors.rank());
  } else {
    std::snprintf(line, sizeof line, "train_rmse=%.6f rank=%zu\n", train_rmse, model.factors.rank());
  }
  out << line;
  return kExitOk;
}

// -------------------------------------------------------------- predict

struct PredictArgs {
  std::string model_path;
  std::string pairs_path;
  bool all = false;
  std::string out_path;
};

int cmd_predict(const PredictArgs& args, std::ostream& out) {
  if (args.all == !args.pairs_path.empty()) {
    throw InvalidArgument("predict needs exactly one of --pairs or --all");
  }
  const CompletionModel model = load_model_file(args.model_path);
  const IdMap ids = load_idmap_for(args.model_path, model);
  std::string text;
  if (args.all) {
    for (std::size_t i = 0; i < model.rows(); ++i) {
      for (std::size_t j = 0; j < model.cols(); ++j) {
        text += ids.row_id(i) + " " + ids.col_id(j) + " " + ten_digits(predict(model, i, j)) + "\n";
      }
    }
  } else {
    const FileBlob blob = read_file(args.pairs_path);
    std::istringstream in(blob.bytes);
    std::string line;
    std::size_t number = 0, unknown = 0;
    std::optional<Separator> separator;
    while (std::getline(in, line)) {
      ++number;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!separator) separator = detect_separator(line);
      const auto fields = split_record(line, *separator);
      if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
        throw ParseError(number, args.pairs_path + ": expected 'user item'");
      }
      const auto row = ids.find_row(fields[0]);
      const auto col = ids.find_col(fields[1]);
      if (!row || !col) ++unknown;
      const double value = predict_or_fallback(model, row.value_or(model.rows()), col.value_or(model.cols()));
      text += std::string(fields[0]) + " " + std::string(fields[1]) + " " + ten_digits(value) + "\n";
    }
    if (unknown > 0) text += "# unknown ids: " + std::to_string(unknown) + "\n";
  }
  emit(args.out_path, text, out);
  return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string model_path;
  std::string test_path;
  bool lenient = false;
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const CompletionModel model = load_model_file(args.model_path);
  IdMap ids = load_idmap_for(args.model_path, model);
  RatingsFormat format;
  format.strict = !args.lenient;
  const SparseObservations test = parse_ratings(read_file(args.test_path), format, ids);
  double value = 0.0;
  if (test.rows() == model.rows() && test.cols() == model.cols()) {
    value = rmse(model, test);
  } else {
    double sum = 0.0;
    for (const auto& e : test.entries()) {
      const double d = predict_or_fallback(model, e.row, e.col) - e.value;
      sum += d * d;
    }
    value = std::sqrt(sum / static_cast<double>(test.nnz()));
  }
  char line[64];
  std::snprintf(line, sizeof line, "%.6f\n", value);
  out << line;
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t rank = 0;
  double density = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::string prefix;
};

int cmd_synth(const SynthArgs& args, std::ostream& out) {
  const SyntheticProblem problem = gen_synthetic(args.m, args.n, args.rank, args.density, args.noise, args.seed);
  const IdMap ids = IdMap::sequential(args.m, args.n);
  write_file_atomically(args.prefix + ".train", [&](std::ostream& o) { write_ratings(o, problem.train, ids); });
  write_file_atomically(args.prefix + ".test", [&](std::ostream& o) { write_ratings(o, problem.test, ids); });
  save_model_file(CompletionModel{problem.truth, Centering::zeros(args.m, args.n)}, args.prefix + ".truth");
  out << "train=" << problem.train.nnz() << " test=" << problem.test.nnz() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<std::size_t> m_list;
  std::size_t n = 500;
  std::size_t rank = 10;
  std::optional<std::size_t> k;
  std::size_t iters = 20;
  std::uint64_t seed = 1;
  std::optional<std::size_t> threads;
};

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  if (args.m_list.empty()) throw InvalidArgument("--m-list is empty");
  const std::size_t threads = resolve_threads(args.threads);
  const std::size_t k = args.k.value_or(args.rank);
  std::string csv = "m,median_seconds\n";
  std::vector<double> times;
  for (const std::size_t m : args.m_list) {
    times.push_back(median_iteration_seconds(m, args.n, args.rank, k, args.iters, args.seed, threads));
    csv += std::to_string(m) + "," + shortest(times.back()) + "\n";
  }
  out << csv;
  for (std::size_t t = 1; t < times.size(); ++t) {
    const double size_ratio = static_cast<double>(args.m_list[t]) / static_cast<double>(args.m_list[t - 1]);
    char line[160];
    std::snprintf(line, sizeof line, "m %zu -> %zu: time ratio %.3f for size ratio %.3f\n",
                  args.m_list[t - 1], args.m_list[t], times[t] / times[t - 1], size_ratio);
    err << line;
  }
  return kExitOk;
}

int handle_errors(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

std::string idmap_path(const std::string& model_path) { return model_path + ".idmap"; }

std::string manifest_path(const std::string& artifact_path) { return artifact_path + ".manifest.json"; }

double predict_or_fallback(const CompletionModel& model, std::size_t i, std::size_t j) {
  const bool row_known = i < model.rows();
  const bool col_known = j < model.cols();
  if (row_known && col_known) return predict(model, i, j);
  const double row_mean = row_known ? model.means.row_means(static_cast<Eigen::Index>(i)) : model.means.global_mean;
  const double col_mean = col_known ? model.means.col_means(static_cast<Eigen::Index>(j)) : model.means.global_mean;
  return 0.5 * (row_mean + col_mean);
}

double median_iteration_seconds(std::size_t m, std::size_t n, std::size_t rank, std::size_t k,
                                std::size_t iterations, std::uint64_t seed, std::size_t threads) {
  if (m < rank || n < rank || k < 1 || k > n || iterations < 1) {
    throw InvalidArgument("bench: need rank <= min(m, n), 1 <= k <= n and at least one iteration");
  }
  Rng rng(seed);
  // About ten ratings per row, so per-column work also grows with m.
  const std::size_t per_column = std::clamp<std::size_t>(10 * m / n, 1, m);
  std::vector<Observation> entries;
  entries.reserve(per_column * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (const std::size_t i : sample_probe(ProbeKind::column_sampling, m, per_column, rng).indices) {
      entries.push_back({i, j, rng.normal()});
    }
  }
  const SparseObservations z(m, n, std::move(entries));
  const SumLoss loss(LossKind::squared, 1.0 / z.frobenius_norm_sq(), z);

  auto gaussian = [&](std::size_t rows, std::size_t cols) {
    DenseMatrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      for (Eigen::Index r = 0; r < a.rows(); ++r) a(r, c) = rng.normal();
    }
    return a;
  };
  CompactSVD x{reduced_qr(gaussian(m, rank)).Q, DenseVector::LinSpaced(static_cast<Eigen::Index>(rank), 2.0, 1.0),
               reduced_qr(gaussian(n, rank)).Q};

  constexpr std::size_t kWarmup = 2;
  const double radius = std::numeric_limits<double>::infinity();
  std::vector<double> seconds;
  for (std::size_t t = 0; t < kWarmup + iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const ProbeMatrix y = sample_probe(ProbeKind::column_sampling, n, k, rng);
    const DenseMatrix s = subgradient_probe(x, loss, 1e-3, y, threads);
    x = incremental_update(x, s, y, 1e-2, rank, radius);
    const auto stop = std::chrono::steady_clock::now();
    if (t >= kWarmup) seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::nth_element(seconds.begin(), seconds.begin() + static_cast<std::ptrdiff_t>(seconds.size() / 2), seconds.end());
  return seconds[seconds.size() / 2];
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nuclear-norm regularized matrix completion by stochastic subgradient descent", "nnssgd"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit a low-rank model to a ratings file");
  train_cmd->add_option("--train", train.train_path, "Training ratings (user item rating)")->required();
  train_cmd->add_option("--test", train.test_path, "Held-out ratings for test RMSE");
  train_cmd->add_option("--rank", train.rank, "Rank cap r")->capture_default_str();
  train_cmd->add_option("--super-iters", train.super_iters, "Super-iterations s")->capture_default_str();
  train_cmd->add_option("--delta", train.delta, "Normalized regularization weight")->capture_default_str();
  train_cmd->add_option("--nu", train.nu, "Normalized step size")->capture_default_str();
  train_cmd->add_option("--k", train.k, "Probe width (default: rank)");
  train_cmd->add_option("--probe", train.probe, "columns, rademacher or gaussian")->capture_default_str();
  train_cmd->add_option("--loss", train.loss, "squared, absolute or hinge")->capture_default_str();
  train_cmd->add_option("--masked", train.masked, "Restrict residuals to observed cells")->capture_default_str();
  train_cmd->add_option("--center", train.center, "Subtract row/column means")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--model-out", train.model_out, "Model file to write");
  train_cmd->add_option("--metrics-out", train.metrics_out, "Metrics CSV to write");
  train_cmd->add_option("--threads", train.threads, "Worker threads (default: $NNSSGD_THREADS or 1)");
  train_cmd->add_option("--metrics-every", train.metrics_every, "Super-iterations between metric rows")
      ->capture_default_str();
  train_cmd->add_option("--scaling", train.scaling, "Probe scaling: consistent or printed")->capture_default_str();
  train_cmd->add_flag("--iid-columns", train.iid_columns, "Draw probe columns with replacement");
  train_cmd->add_flag("--return-best", train.return_best, "Keep the lowest-objective checkpoint");
  train_cmd->add_flag("--no-timing", train.no_timing, "Write 0 for wall_seconds (byte-stable metrics)");
  train_cmd->add_flag("--lenient", train.lenient, "Duplicate ratings: last one wins");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Predict ratings from a model");
  predict_cmd->add_option("--model", predict_args.model_path, "Model file")->required();
  predict_cmd->add_option("--pairs", predict_args.pairs_path, "File of 'user item' lines");
  predict_cmd->add_flag("--all", predict_args.all, "Predict every cell of the model");
  predict_cmd->add_option("--out", predict_args.out_path, "Output file (default: stdout)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "RMSE of a model on a ratings file");
  eval_cmd->add_option("--model", eval_args.model_path, "Model file")->required();
  eval_cmd->add_option("--test", eval_args.test_path, "Ratings file")->required();
  eval_cmd->add_flag("--lenient", eval_args.lenient, "Duplicate ratings: last one wins");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic low-rank completion problem");
  synth_cmd->add_option("--m", synth.m, "Rows")->required();
  synth_cmd->add_option("--n", synth.n, "Columns")->required();
  synth_cmd->add_option("--rank", synth.rank, "True rank")->required();
  synth_cmd->add_option("--density", synth.density, "Observed fraction")->required();
  synth_cmd->add_option("--noise", synth.noise, "Noise standard deviation")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out-prefix", synth.prefix, "Writes PREFIX.train, PREFIX.test, PREFIX.truth")
      ->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Median per-iteration time for several m");
  bench_cmd->add_option("--m-list", bench.m_list, "Comma separated row counts")->required()->delimiter(',');
  bench_cmd->add_option("--n", bench.n, "Columns")->capture_default_str();
  bench_cmd->add_option("--rank", bench.rank, "Rank")->capture_default_str();
  bench_cmd->add_option("--k", bench.k, "Probe width (default: rank)");
  bench_cmd->add_option("--iters", bench.iters, "Timed iterations per m")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (default: $NNSSGD_THREADS or 1)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  return handle_errors(err, [&] {
    if (*train_cmd) return cmd_train(train, out);
    if (*predict_cmd) return cmd_predict(predict_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*synth_cmd) return cmd_synth(synth, out);
    return cmd_bench(bench, out, err);
  });
}

}  // namespace nnssgd::cli
