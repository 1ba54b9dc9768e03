#include "hydrocast/cli.hpp"

#include <iostream>

#include "CLI11.hpp"
#include "hydrocast/error.hpp"
#include "hydrocast/pipeline.hpp"
#include "hydrocast/text.hpp"

namespace hydrocast::cli {
namespace {

struct Options {
  std::string data;
  std::string output = "hydrocast_out";
  std::uint64_t seed = 0;
  std::string points = "reference";
  std::vector<std::string> point;

  double gamma = 0.9;
  std::string norm = "l2";
  std::size_t kappa = 10;
  std::size_t trees_per_stage = 100;
  std::size_t max_stages = 10;
  double rho = 1.0;
  double stop_tolerance = 1e-4;
  int weak_depth = 3;
  std::size_t weak_min_leaf = 1;
  std::string count_mode = "tree";

  double train_fraction = 0.9;
  std::string split_mode = "chronological";
  bool select_on_all = false;
  bool pooled = false;
  bool continue_on_error = false;

  std::vector<std::string> models = {"RF", "KNN", "SVR", "LR", "MLP"};
  std::size_t knn_k = 3;
  std::size_t rf_trees = 100;
  std::size_t rf_min_leaf = 2;
  double svr_c = 1.0;
  double svr_epsilon = 0.1;
  std::vector<std::size_t> mlp_hidden = {32};
  std::size_t mlp_epochs = 500;
  double mlp_lr = 1e-3;

  std::string format = "all";

  // synth
  std::size_t samples = 444;
  std::vector<std::string> planted = {"air_l01", "rhum_l01", "uwnd_l04", "air_l11", "rhum_l08"};
  double noise = 0.1;
  bool linear = false;
  std::string out = "data.csv";
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

IndexPoint parse_point(const std::string& text) {
  const auto fields = split_fields(text, ',');
  if (fields.size() < 2 || fields.size() > 3) {
    throw UsageError("--point expects lon,lat[,elev], got '" + text + "'");
  }
  IndexPoint p{parse_double(fields[0]), parse_double(fields[1]),
               fields.size() == 3 ? parse_double(fields[2]) : 0.0, ""};
  for (const auto& ref : reference_points()) {
    if (ref.same_location(p)) return ref;
  }
  return p;
}

std::vector<IndexPoint> requested_points(const Options& o) {
  if (!o.point.empty()) {
    std::vector<IndexPoint> out;
    for (const auto& p : o.point) out.push_back(parse_point(p));
    return out;
  }
  const auto& refs = reference_points();
  if (o.points == "reference") return refs;
  if (o.points == "file") return {};
  std::size_t n = 0;
  try {
    n = std::stoul(o.points);
  } catch (const std::exception&) {
    throw UsageError("--points expects 'reference', 'file' or a count");
  }
  if (n < 1 || n > refs.size()) throw UsageError("--points count must be 1..13");
  return {refs.begin(), refs.begin() + static_cast<std::ptrdiff_t>(n)};
}

PipelineConfig make_config(const Options& o) {
  PipelineConfig cfg;
  cfg.data_path = o.data;
  cfg.output_dir = o.output;
  cfg.seed = o.seed;
  cfg.index_points = requested_points(o);

  cfg.selection.colinearity.gamma = o.gamma;
  cfg.selection.colinearity.norm = o.norm == "l1" ? CosineNorm::kL1AsPrinted : CosineNorm::kL2;
  cfg.selection.kappa = o.kappa;
  cfg.selection.occurrence_mode =
      o.count_mode == "node" ? OccurrenceMode::kPerNode : OccurrenceMode::kPerTree;
  auto& boost = cfg.selection.boost;
  boost.trees_per_stage = o.trees_per_stage;
  boost.max_stages = o.max_stages;
  boost.rho = o.rho;
  boost.stop_tolerance = o.stop_tolerance;
  boost.weak_tree.max_depth = o.weak_depth;
  boost.weak_tree.min_samples_leaf = o.weak_min_leaf;

  cfg.split.train_fraction = o.train_fraction;
  cfg.split.mode = o.split_mode == "random" ? SplitMode::kSeededRandom : SplitMode::kChronological;
  cfg.select_on_all = o.select_on_all;
  cfg.pooled = o.pooled;
  cfg.continue_on_error = o.continue_on_error;

  cfg.learners.clear();
  for (const auto& name : o.models) {
    LearnerSpec spec;
    try {
      spec.kind = parse_kind(name);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    spec.knn.k = o.knn_k;
    spec.forest.n_trees = o.rf_trees;
    spec.forest.min_samples_leaf = o.rf_min_leaf;
    spec.svr.c = o.svr_c;
    spec.svr.epsilon = o.svr_epsilon;
    spec.mlp.hidden_sizes = o.mlp_hidden;
    spec.mlp.epochs = o.mlp_epochs;
    spec.mlp.learning_rate = o.mlp_lr;
    cfg.learners.push_back(spec);
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void require_data(const Options& o) {
  if (o.data.empty()) throw UsageError("--data is required");
}

std::vector<ReportFormat> report_formats(const std::string& format) {
  if (format == "all") return {};
  try {
    return {parse_report_format(format)};
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void cmd_synth(const Options& o) {
  std::vector<FeatureId> planted;
  try {
    for (const auto& name : o.planted) planted.push_back(parse_feature_name(name));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::vector<IndexPoint> points = requested_points(o);
  if (points.empty()) points = reference_points();
  std::vector<Dataset> datasets;
  for (const auto& p : points) {
    SyntheticSpec spec;
    spec.n_samples = o.samples;
    spec.planted = planted;
    spec.noise_sigma = o.noise;
    spec.noise_relative_to_signal = true;
    spec.shape = o.linear ? SignalShape::kLinear : SignalShape::kMixed;
    spec.seed = point_seed(o.seed, p);
    spec.point = p;
    auto synthetic = generate_synthetic(spec);
    std::cout << p.key() << ": " << synthetic.truth.description << '\n';
    datasets.push_back(std::move(synthetic.data));
  }
  save_csv(o.out, datasets);
  std::cout << "wrote " << o.out << " (" << datasets.size() << " points x " << o.samples
            << " samples)\n";
}

void add_pipeline_options(CLI::App& app, Options& o) {
  app.add_option("--data", o.data, "Input CSV (date,lon,lat,elev,<85 features>,precip)");
  app.add_option("--points", o.points, "'reference' (13 points), 'file', or first N reference points")
      ->capture_default_str();
  app.add_option("--point", o.point, "Explicit index point lon,lat[,elev]; repeatable");

  app.add_option("--gamma", o.gamma, "Colinearity threshold on |cos|")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--norm", o.norm, "Cosine denominator: l2 or l1 (as printed)")
      ->check(CLI::IsMember({"l2", "l1"}))
      ->capture_default_str();
  app.add_option("--kappa", o.kappa, "Number of features to keep")->capture_default_str();
  app.add_option("--trees-per-stage", o.trees_per_stage)->capture_default_str();
  app.add_option("--max-stages", o.max_stages)->capture_default_str();
  app.add_option("--rho", o.rho, "Boosting step size")->capture_default_str();
  app.add_option("--stop-tolerance", o.stop_tolerance, "Relative training-MSE improvement")
      ->capture_default_str();
  app.add_option("--weak-depth", o.weak_depth, "Depth of boosting trees")->capture_default_str();
  app.add_option("--weak-min-leaf", o.weak_min_leaf)->capture_default_str();
  app.add_option("--count-mode", o.count_mode, "Occurrence counting: tree or node")
      ->check(CLI::IsMember({"tree", "node"}))
      ->capture_default_str();

  app.add_option("--train-fraction", o.train_fraction)->capture_default_str();
  app.add_option("--split", o.split_mode, "chronological or random")
      ->check(CLI::IsMember({"chronological", "random"}))
      ->capture_default_str();
  app.add_flag("--select-on-all", o.select_on_all, "Run selection on all rows, test rows included");
  app.add_flag("--pooled", o.pooled, "One selection over the pooled training rows of all points");
  app.add_flag("--continue-on-error", o.continue_on_error, "Record per-point failures and go on");

  app.add_option("--models", o.models, "Learners to train")->delimiter(',')->capture_default_str();
  app.add_option("--knn-k", o.knn_k)->capture_default_str();
  app.add_option("--rf-trees", o.rf_trees)->capture_default_str();
  app.add_option("--rf-min-leaf", o.rf_min_leaf)->capture_default_str();
  app.add_option("--svr-c", o.svr_c)->capture_default_str();
  app.add_option("--svr-epsilon", o.svr_epsilon)->capture_default_str();
  app.add_option("--mlp-hidden", o.mlp_hidden, "Hidden layer widths")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--mlp-epochs", o.mlp_epochs)->capture_default_str();
  app.add_option("--mlp-lr", o.mlp_lr)->capture_default_str();
  app.add_option("--format", o.format, "Report format: text, csv, json or all")
      ->check(CLI::IsMember({"text", "text-table", "csv", "json", "all"}))
      ->capture_default_str();
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Monthly precipitation prediction from reanalysis predictors", "hydrocast"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value configuration file; command-line flags win");

  Options o;
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app.add_option("--output", o.output, "Output directory")->capture_default_str();
  add_pipeline_options(app, o);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with planted features");
  synth->add_option("--samples", o.samples)->capture_default_str();
  synth->add_option("--planted", o.planted, "Planted feature names")
      ->delimiter(',')
      ->capture_default_str();
  synth->add_option("--noise", o.noise, "Noise std as a fraction of the signal std")
      ->capture_default_str();
  synth->add_flag("--linear", o.linear, "Purely linear signal");
  synth->add_option("--out", o.out, "CSV path")->capture_default_str();

  auto* select = app.add_subcommand("select", "Colinearity pruning + boosting feature selection");
  auto* train = app.add_subcommand("train", "Fit the learners on the selected features");
  auto* evaluate = app.add_subcommand("evaluate", "Score the fitted learners on the test rows");
  auto* report = app.add_subcommand("report", "Aggregate the per-point evaluations");
  auto* run_all = app.add_subcommand("run", "select + train + evaluate + report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      cmd_synth(o);
      return 0;
    }
    require_data(o);
    const PipelineConfig cfg = make_config(o);
    if (select->parsed()) {
      stage_select(cfg);
      std::cout << "selection written under " << cfg.output_dir.string() << '\n';
    } else if (train->parsed()) {
      stage_train(cfg);
      std::cout << "models written under " << cfg.output_dir.string() << '\n';
    } else if (evaluate->parsed()) {
      stage_evaluate(cfg);
      std::cout << "evaluations written under " << cfg.output_dir.string() << '\n';
    } else if (report->parsed()) {
      const auto formats = report_formats(o.format);
      stage_report(cfg, formats);
      std::cout << "report written under " << cfg.output_dir.string() << '\n';
    } else if (run_all->parsed()) {
      const auto result = run_pipeline(cfg);
      std::cout << render_report(result.report, ReportFormat::kText);
      for (const auto& p : result.points) {
        if (!p.error.empty()) std::cerr << "point " << p.point.key() << " failed: " << p.error << '\n';
      }
    }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("hydrocast");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(storage.size()), argv.data());
}

}  // namespace hydrocast::cli
