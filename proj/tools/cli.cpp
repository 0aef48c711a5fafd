#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "afflabel/catalog.hpp"
#include "afflabel/errors.hpp"
#include "afflabel/evaluation.hpp"
#include "afflabel/feature_store.hpp"
#include "afflabel/manifold_curvature.hpp"
#include "afflabel/model_io.hpp"
#include "afflabel/npy.hpp"
#include "afflabel/subspace_projection.hpp"
#include "afflabel/testkit.hpp"
#include "json_config.hpp"

namespace afflabel::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct SplitOptions {
  std::string features;
  std::string labels;
  std::size_t n_learning = 0;
  std::uint64_t seed = 0;
  std::string strategy = "shuffled";
  std::string out_dir;
};

struct FitOptions {
  std::string method;
  std::string features;
  std::string labels;
  std::string model;
  std::string log;
  std::string roc_csv;
  std::string dim_policy = "energy";
  double energy = 0.95;
  Eigen::Index dim = 0;
  Eigen::Index dim_cap = 64;
  std::optional<double> grid_step;
  std::size_t n = kDefaultNeighborCount;
  double rank_tol = kDefaultRankTolerance;
};

struct LabelOptions {
  std::string model;
  std::string features;
  std::string ids;
  std::string out;
};

struct EvalOptions {
  std::string predictions;
  std::string truth;
  std::string out;
  std::string method;
  std::string extractor;
  std::int64_t vector_size = 0;
};

struct CompareOptions {
  std::string a;
  std::string b;
  std::string out;
};

struct SynthOptions {
  std::size_t groups = 5;
  Eigen::Index dim = 128;
  Eigen::Index d = 6;
  std::size_t points = 400;
  std::size_t validation = 100;
  double overlap = 0.0;
  Eigen::Index intersection_dim = 1;
  double noise = 0.0;
  double curvature_scale = 1.0;
  double offset_scale = 2.0;
  Eigen::Index shared_span = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
};

AffordanceCatalog catalog_from(const std::string& path) {
  if (path.empty()) return AffordanceCatalog().with_aliases(AffordanceCatalog::dataset_aliases());
  return AffordanceCatalog::load(path);
}

void write_json(const fs::path& path, const ojson& j) { write_file_atomic(path, j.dump(2) + "\n"); }

ojson file_entry(const fs::path& path) {
  return ojson{{"path", path.string()}, {"checksum", file_checksum(path)}};
}

std::string fixed(double v, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---- split ----

void cmd_split(const SplitOptions& o, const std::string& catalog_path, std::ostream& out) {
  const AffordanceCatalog catalog = catalog_from(catalog_path);
  if (o.strategy != "shuffled" && o.strategy != "sequential") {
    throw DataError("unknown split strategy \"" + o.strategy + "\"");
  }
  const LabeledSet set = load_labeled_set(o.features, o.labels, catalog);
  const SplitSpec spec{o.n_learning, o.seed,
                       o.strategy == "shuffled" ? SplitStrategy::kShuffled : SplitStrategy::kSequential};
  // Validates the counts before anything touches the output directory.
  auto [learning, validation] = split_dataset(set, spec);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  store_labeled_set(dir / "learning.npy", dir / "learning.jsonl", learning, catalog);
  store_labeled_set(dir / "validation.npy", dir / "validation.jsonl", validation, catalog);

  ojson manifest;
  manifest["command"] = "split";
  manifest["seed"] = o.seed;
  manifest["strategy"] = o.strategy;
  manifest["n_learning"] = learning.size();
  manifest["n_validation"] = validation.size();
  manifest["inputs"] = {{"features", file_entry(o.features)}, {"labels", file_entry(o.labels)}};
  ojson outputs;
  for (const char* name : {"learning.npy", "learning.jsonl", "validation.npy", "validation.jsonl"}) {
    outputs[name] = file_checksum(dir / name);
  }
  manifest["outputs"] = outputs;
  write_json(dir / "split_manifest.json", manifest);
  out << "learning " << learning.size() << ", validation " << validation.size() << " -> "
      << dir.string() << "\n";
}

// ---- fit ----

DimPolicy policy_from(const FitOptions& o) {
  if (o.dim_policy == "energy") return DimPolicy::energy_fraction(o.energy, o.dim_cap);
  if (o.dim_policy == "fixed") return DimPolicy::fixed(o.dim, o.dim_cap);
  throw DataError("unknown dimension policy \"" + o.dim_policy + "\"");
}

ojson fit_row(const ThresholdTable& table, std::size_t k, const AffordanceCatalog& catalog) {
  ojson row;
  row["label"] = catalog.name(k);
  row["enabled"] = table.enabled(k);
  if (table.enabled(k)) {
    const ThresholdFit& fit = *table.fits[k];
    row["threshold"] = fit.threshold;
    row["tpr"] = fit.tpr;
    row["fpr"] = fit.fpr;
    row["ts"] = fit.ts;
  }
  if (!table.notes.at(k).empty()) row["note"] = table.notes[k];
  return row;
}

void write_roc_csv(const fs::path& path, const ThresholdTable& table, const AffordanceCatalog& catalog) {
  std::string text = "label,threshold,tpr,fpr,ts\n";
  for (std::size_t k = 0; k < table.roc.size(); ++k) {
    for (const RocPoint& p : table.roc[k]) {
      text += catalog.name(k) + "," + csv_number(p.threshold) + "," + csv_number(p.tpr) + "," +
              csv_number(p.fpr) + "," + csv_number(p.ts) + "\n";
    }
  }
  write_file_atomic(path, text);
}

void print_fit_table(const ojson& rows, const char* size_column, std::ostream& out) {
  out << std::left << std::setw(16) << "affordance" << std::right << std::setw(8) << size_column
      << std::setw(11) << "threshold" << std::setw(8) << "TPR" << std::setw(8) << "FPR"
      << std::setw(8) << "ts" << "\n";
  for (const auto& row : rows) {
    if (!row.at("enabled").get<bool>()) continue;
    out << std::left << std::setw(16) << row.at("label").get<std::string>() << std::right
        << std::setw(8) << row.at(size_column).dump() << std::setw(11)
        << fixed(row.at("threshold").get<double>(), 4) << std::setw(8)
        << fixed(row.at("tpr").get<double>(), 4) << std::setw(8)
        << fixed(row.at("fpr").get<double>(), 4) << std::setw(8)
        << fixed(row.at("ts").get<double>(), 4) << "\n";
  }
}

void report_notes(const ThresholdTable& table, const AffordanceCatalog& catalog, std::ostream& err) {
  for (std::size_t k = 0; k < table.notes.size(); ++k) {
    if (table.notes[k].empty()) continue;
    if (k < catalog.size()) {
      err << "warning: " << catalog.name(k) << ": " << table.notes[k] << "\n";
    } else {
      err << "warning: " << table.notes[k] << "\n";
    }
  }
}

void cmd_fit(const FitOptions& o, const std::string& catalog_path, unsigned threads,
             std::ostream& out, std::ostream& err) {
  const Method method = parse_method(o.method);
  const AffordanceCatalog catalog = catalog_from(catalog_path);
  const LabeledSet learning = load_labeled_set(o.features, o.labels, catalog);
  const fs::path model_path(o.model);
  const fs::path log_path = o.log.empty() ? fs::path(model_path).replace_extension(".fit.json") : fs::path(o.log);
  if (!model_path.parent_path().empty()) fs::create_directories(model_path.parent_path());

  ojson log;
  log["command"] = "fit";
  log["method"] = method_name(method);
  log["feature_dim"] = learning.features.dim();
  log["n_learning"] = learning.size();
  log["inputs"] = {{"features", file_entry(o.features)}, {"labels", file_entry(o.labels)}};
  ojson rows = ojson::array();
  const ThresholdTable* table = nullptr;
  const char* size_column = nullptr;

  SpmModel spm;
  CurvatureModel mcm;
  if (method == Method::kSpm) {
    const DimPolicy policy = policy_from(o);
    spm = fit_spm(learning, catalog, policy, o.grid_step.value_or(kDefaultRatioGridStep), threads);
    save_spm_model(model_path, spm);
    table = &spm.thresholds;
    size_column = "d";
    log["policy"] = {{"mode", o.dim_policy}, {"energy", o.energy}, {"dim", o.dim}, {"cap", o.dim_cap}};
    for (std::size_t k = 0; k < catalog.size(); ++k) {
      ojson row = fit_row(*table, k, catalog);
      row["d"] = spm.bases[k] ? ojson(spm.bases[k]->dim()) : ojson(nullptr);
      if (spm.bases[k] && !spm.bases[k]->warnings.empty()) row["basis_warnings"] = spm.bases[k]->warnings;
      rows.push_back(row);
    }
  } else {
    mcm = fit_mcm(learning, catalog, o.n, o.grid_step.value_or(kDefaultAngleGridStep), o.rank_tol, threads);
    save_curvature_model(model_path, mcm, o.features, o.labels);
    table = &mcm.thresholds;
    size_column = "members";
    log["n"] = o.n;
    for (std::size_t k = 0; k < catalog.size(); ++k) {
      ojson row = fit_row(*table, k, catalog);
      row["members"] = mcm.clusters[k].members.size();
      rows.push_back(row);
    }
  }
  log["grid"] = {{"lo", table->grid.lo}, {"hi", table->grid.hi}, {"step", table->grid.step}};
  log["affordances"] = rows;
  log["notes"] = table->notes;
  log["model"] = file_entry(model_path);
  write_json(log_path, log);
  if (!o.roc_csv.empty()) write_roc_csv(o.roc_csv, *table, catalog);

  report_notes(*table, catalog, err);
  print_fit_table(rows, size_column, out);
  out << table->enabled_count() << " of " << catalog.size() << " affordances enabled; model "
      << model_path.string() << "\n";
}

// ---- label ----

void cmd_label(const LabelOptions& o, unsigned threads, std::ostream& out) {
  const fs::path model_path(o.model);
  const Method method = model_method(model_path);
  std::vector<std::string> ids = load_scene_ids(o.ids);

  std::optional<SpmModel> spm;
  std::optional<CurvatureModel> mcm;
  if (method == Method::kSpm) {
    spm = load_spm_model(model_path);
  } else {
    mcm = load_curvature_model(model_path);
  }
  const AffordanceCatalog& catalog = spm ? spm->catalog : mcm->catalog;

  Assignments result;
  if (ids.empty()) {
    const npy::Array2D array = npy::read(o.features);
    if (array.rows != 0) {
      throw DataError("id/column count mismatch: 0 ids for " + std::to_string(array.rows) +
                      " feature rows in " + o.features);
    }
  } else {
    const FeatureMatrix features = load_feature_matrix(o.features, std::move(ids));
    result = spm ? label_spm(*spm, features, threads) : label_mcm(*mcm, features, threads);
  }
  write_file_atomic(o.out, format_assignments(result, catalog));
  out << result.scene_ids.size() << " scenes labeled -> " << o.out << "\n";
}

// ---- eval / compare ----

void cmd_eval(const EvalOptions& o, const std::string& catalog_path, std::ostream& out) {
  const AffordanceCatalog catalog = catalog_from(catalog_path);
  const LabelTable truth = load_labels(o.truth, catalog);
  const Assignments predicted = load_assignments(o.predictions, catalog);
  const EvalReport report =
      make_report(confusion_counts(predicted, truth, catalog), catalog, o.method, o.extractor, o.vector_size);
  if (!o.out.empty()) write_file_atomic(o.out, report_to_json(report).dump(2) + "\n");
  out << format_report_table(report);
}

EvalReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return report_from_json(j);
}

void cmd_compare(const CompareOptions& o, std::ostream& out) {
  const EvalReport a = read_report(o.a);
  const EvalReport b = read_report(o.b);
  const ReportDiff diff = compare_reports(a, b);
  if (!o.out.empty()) write_file_atomic(o.out, diff_to_json(diff).dump(2) + "\n");
  out << format_diff_table(diff, a, b);
}

// ---- synth ----

void cmd_synth(const SynthOptions& o, bool manifold, std::ostream& out) {
  testkit::SynthSpec spec;
  spec.dim = o.dim;
  spec.groups = o.groups;
  spec.d_true = o.d;
  spec.points_per_group = o.points;
  spec.validation_per_group = o.validation;
  spec.noise_sigma = o.noise;
  spec.seed = o.seed;
  if (manifold) {
    spec.curvature = testkit::Curvature::kQuadraticEmbedding;
    spec.curvature_scale = o.curvature_scale;
    spec.offset_scale = o.offset_scale;
    spec.shared_span_dim = o.shared_span;
  } else {
    spec.intersection_dim = o.intersection_dim;
    spec.overlap_fraction = o.overlap;
    if (o.overlap > 0.0) spec.overlap_pairs = testkit::ring_pairs(o.groups);
  }
  spec.validate();
  const testkit::SynthData data =
      manifold ? testkit::gen_curved_manifold(spec) : testkit::gen_union_of_subspaces(spec);

  const AffordanceCatalog catalog;
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  store_labeled_set(dir / "features.npy", dir / "labels.jsonl", data.set, catalog);

  ojson manifest;
  manifest["command"] = manifold ? "synth manifold" : "synth subspaces";
  manifest["seed"] = o.seed;
  ojson s;
  s["groups"] = o.groups;
  s["dim"] = o.dim;
  s["d"] = o.d;
  s["points_per_group"] = o.points;
  s["validation_per_group"] = o.validation;
  s["noise"] = o.noise;
  if (manifold) {
    s["curvature_scale"] = o.curvature_scale;
    s["offset_scale"] = o.offset_scale;
    s["shared_span"] = o.shared_span;
  } else {
    s["overlap"] = o.overlap;
    s["intersection_dim"] = o.intersection_dim;
  }
  manifest["spec"] = s;
  manifest["n_scenes"] = data.set.size();
  manifest["n_learning"] = data.n_learning;
  manifest["outputs"] = {{"features.npy", file_checksum(dir / "features.npy")},
                         {"labels.jsonl", file_checksum(dir / "labels.jsonl")}};
  write_json(dir / "synth_manifest.json", manifest);
  out << data.set.size() << " scenes (" << data.n_learning << " learning block) -> " << dir.string()
      << "\n";
}

void add_synth_options(CLI::App* sub, SynthOptions& o, bool manifold) {
  sub->add_option("--groups", o.groups, "Number of affordance groups")->capture_default_str();
  sub->add_option("--dim", o.dim, "Ambient dimension D")->capture_default_str();
  sub->add_option("--d", o.d, "Intrinsic dimension per group")->capture_default_str();
  sub->add_option("--points", o.points, "Learning points per group")->capture_default_str();
  sub->add_option("--validation", o.validation, "Validation points per group")->capture_default_str();
  sub->add_option("--noise", o.noise, "Gaussian noise sigma")->capture_default_str();
  sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sub->add_option("--out-dir", o.out_dir, "Output directory")->required();
  if (manifold) {
    sub->add_option("--curvature-scale", o.curvature_scale, "Weight of the quadratic term")->capture_default_str();
    sub->add_option("--offset-scale", o.offset_scale, "Spread of the manifold centres")->capture_default_str();
    sub->add_option("--shared-span", o.shared_span, "Common ambient span dimension (0 = none)")
        ->capture_default_str();
  } else {
    sub->add_option("--overlap", o.overlap, "Fraction of points on pairwise intersections")
        ->capture_default_str();
    sub->add_option("--intersection-dim", o.intersection_dim, "Shared directions per pair")
        ->capture_default_str();
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Affordance labeling from pretrained feature vectors", "afflabel"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file mirroring the command-line flags");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  unsigned threads = 1;
  std::string catalog_path;
  app.add_option("--threads", threads, "Worker threads")
      ->envname("AFFLABEL_THREADS")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  app.add_option("--catalog", catalog_path, "Affordance catalog JSON (default: built-in)");

  SplitOptions split_o;
  CLI::App* split = app.add_subcommand("split", "Split a labeled set into learning and validation files");
  split->add_option("--features", split_o.features, "Feature NPY")->required();
  split->add_option("--labels", split_o.labels, "Label JSONL")->required();
  split->add_option("--n-learning", split_o.n_learning, "Scenes in the learning set")->required();
  split->add_option("--seed", split_o.seed, "Shuffle seed")->capture_default_str();
  split->add_option("--strategy", split_o.strategy, "shuffled or sequential")
      ->check(CLI::IsMember({"shuffled", "sequential"}))
      ->capture_default_str();
  split->add_option("--out-dir", split_o.out_dir, "Output directory")->required();

  FitOptions fit_o;
  CLI::App* fit = app.add_subcommand("fit", "Fit an SPM or MCM model on learning files");
  fit->add_option("--method", fit_o.method, "spm or mcm")->required()->check(CLI::IsMember({"spm", "mcm"}));
  fit->add_option("--features", fit_o.features, "Learning feature NPY")->required();
  fit->add_option("--labels", fit_o.labels, "Learning label JSONL")->required();
  fit->add_option("--model", fit_o.model, "Model output path (JSON)")->required();
  fit->add_option("--log", fit_o.log, "Fit log path (default: <model>.fit.json)");
  fit->add_option("--roc-csv", fit_o.roc_csv, "Write every ROC point of the threshold sweeps");
  fit->add_option("--dim-policy", fit_o.dim_policy, "SPM: energy or fixed")
      ->check(CLI::IsMember({"energy", "fixed"}))
      ->capture_default_str();
  fit->add_option("--energy", fit_o.energy, "SPM: energy fraction")->capture_default_str();
  fit->add_option("--dim", fit_o.dim, "SPM: fixed subspace dimension");
  fit->add_option("--dim-cap", fit_o.dim_cap, "SPM: upper bound on d")->capture_default_str();
  fit->add_option("--grid-step", fit_o.grid_step, "Threshold sweep step (default 0.001)");
  fit->add_option("--n", fit_o.n, "MCM: neighbours per query")->capture_default_str();
  fit->add_option("--rank-tol", fit_o.rank_tol, "MCM: relative rank tolerance")->capture_default_str();

  LabelOptions label_o;
  CLI::App* label = app.add_subcommand("label", "Assign affordances with a fitted model");
  label->add_option("--model", label_o.model, "Model file")->required();
  label->add_option("--features", label_o.features, "Feature NPY")->required();
  label->add_option("--ids", label_o.ids, "JSONL supplying the scene ids (a label file works)")->required();
  label->add_option("--out", label_o.out, "Predictions JSONL")->required();

  EvalOptions eval_o;
  CLI::App* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--predictions", eval_o.predictions, "Predictions JSONL")->required();
  eval->add_option("--truth", eval_o.truth, "Ground-truth label JSONL")->required();
  eval->add_option("--out", eval_o.out, "Report JSON");
  eval->add_option("--method", eval_o.method, "Method name for the report");
  eval->add_option("--extractor", eval_o.extractor, "Extractor name for the report");
  eval->add_option("--vector-size", eval_o.vector_size, "Feature dimension for the report");

  CompareOptions compare_o;
  CLI::App* compare = app.add_subcommand("compare", "Difference of two reports (a - b)");
  compare->add_option("--a", compare_o.a, "Report JSON")->required();
  compare->add_option("--b", compare_o.b, "Report JSON")->required();
  compare->add_option("--out", compare_o.out, "Difference JSON");

  SynthOptions subspaces_o;
  SynthOptions manifold_o;
  manifold_o.d = 3;
  CLI::App* synth = app.add_subcommand("synth", "Write synthetic interchange files");
  synth->require_subcommand(1);
  CLI::App* subspaces = synth->add_subcommand("subspaces", "Union of linear subspaces");
  CLI::App* manifold = synth->add_subcommand("manifold", "Quadratic-embedding manifolds");
  add_synth_options(subspaces, subspaces_o, false);
  add_synth_options(manifold, manifold_o, true);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (split->parsed()) cmd_split(split_o, catalog_path, out);
    if (fit->parsed()) cmd_fit(fit_o, catalog_path, threads, out, err);
    if (label->parsed()) cmd_label(label_o, threads, out);
    if (eval->parsed()) cmd_eval(eval_o, catalog_path, out);
    if (compare->parsed()) cmd_compare(compare_o, out);
    if (subspaces->parsed()) cmd_synth(subspaces_o, false, out);
    if (manifold->parsed()) cmd_synth(manifold_o, true, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace afflabel::cli
