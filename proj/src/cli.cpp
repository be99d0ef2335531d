#include "xferlens/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "xferlens/errors.hpp"
#include "xferlens/infocontent.hpp"
#include "xferlens/manifest.hpp"
#include "xferlens/overlap.hpp"
#include "xferlens/parallel.hpp"
#include "xferlens/random.hpp"
#include "xferlens/report.hpp"
#include "xferlens/reuse.hpp"
#include "xferlens/simkit.hpp"
#include "xferlens/stats.hpp"

namespace xferlens::cli {

std::uint64_t subcommand_seed(std::uint64_t seed, const std::string& name) { return seed ^ fnv1a64(name); }

namespace {

struct Globals {
  std::uint64_t seed = 42;
  std::string format = "json";
  int threads = 0;
  std::string output;
};

struct Context {
  Globals globals;
  int threads = 1;
  std::vector<std::string> warnings;

  Json base_config(const std::string& name) const {
    Json c = Json::object();
    c["seed"] = globals.seed;
    c["sub_seed"] = subcommand_seed(globals.seed, name);
    c["threads"] = threads;
    c["format"] = globals.format;
    return c;
  }
};

using Runner = std::function<AnalysisReport(Context&)>;

KernelKind parse_kernel(const std::string& s) {
  if (s == "linear") return KernelKind::linear;
  if (s == "rbf") return KernelKind::rbf;
  throw SchemaError("unknown kernel '" + s + "'");
}


// ---------------------------------------------------------------- similarity

struct CkaArgs {
  std::string x, y, kernel = "linear";
  double fraction = 1.0;
};

AnalysisReport run_cka(Context& ctx, const CkaArgs& a) {
  const CkaConfig cfg{parse_kernel(a.kernel), a.fraction};
  const auto x = read_tensor(a.x).as_matrix();
  const auto y = read_tensor(a.y).as_matrix();
  AnalysisReport r;
  r.analysis = "cka";
  r.config = ctx.base_config("cka");
  r.config["x"] = a.x;
  r.config["y"] = a.y;
  r.config["kernel"] = a.kernel;
  r.config["bandwidth_fraction"] = a.fraction;
  r.results["cka"] = cka(x, y, cfg);
  r.results["n_examples"] = x.rows();
  return r;
}

struct ReuseArgs {
  std::string pre, post, kernel = "rbf";
  double fraction = 1.0;
  int layers = 3;
};

std::vector<ConvLayerWeights> first_layers(std::vector<ConvLayerWeights> all, int n) {
  if (n > 0 && static_cast<std::size_t>(n) < all.size()) all.resize(static_cast<std::size_t>(n));
  return all;
}

AnalysisReport run_reuse(Context& ctx, const ReuseArgs& a) {
  const CkaConfig cfg{parse_kernel(a.kernel), a.fraction};
  const auto pre = first_layers(load_layers(load_manifest(a.pre)), a.layers);
  const auto post_all = load_layers(load_manifest(a.post));
  std::vector<ConvLayerWeights> post;
  for (const auto& l : pre) {
    const auto it = std::ranges::find(post_all, l.layer_id, &ConvLayerWeights::layer_id);
    if (it == post_all.end()) throw PairingError("layer '" + l.layer_id + "' missing from finetuned weights");
    post.push_back(*it);
  }
  const auto rep = feature_reuse(pre, post, cfg, ctx.threads);

  AnalysisReport r;
  r.analysis = "reuse";
  r.config = ctx.base_config("reuse");
  r.config["pre"] = a.pre;
  r.config["post"] = a.post;
  r.config["layers"] = a.layers;
  r.config["kernel"] = a.kernel;
  r.config["bandwidth_fraction"] = a.fraction;
  ReportTable t{"layers", {"layer_id", "cka"}, {}};
  double sum = 0.0;
  for (const auto& l : rep.layers) {
    t.rows.push_back({l.layer_id, l.cka});
    sum += l.cka;
  }
  r.results["mean_cka"] = sum / static_cast<double>(rep.layers.size());
  r.tables.push_back(std::move(t));
  return r;
}

struct UniquenessArgs {
  std::string weights, kernel = "rbf";
  double fraction = 1.0;
  int layers = 3, splits = 8, repeats = 20;
};

AnalysisReport run_uniqueness(Context& ctx, const UniquenessArgs& a) {
  const auto layers = first_layers(load_layers(load_manifest(a.weights)), a.layers);
  const std::uint64_t seed = subcommand_seed(ctx.globals.seed, "uniqueness");
  AnalysisReport r;
  r.analysis = "uniqueness";
  r.config = ctx.base_config("uniqueness");
  r.config["weights"] = a.weights;
  r.config["layers"] = a.layers;
  r.config["n_splits"] = a.splits;
  r.config["n_repeats"] = a.repeats;
  r.config["kernel"] = a.kernel;
  r.config["bandwidth_fraction"] = a.fraction;
  ReportTable t{"layers", {"layer_id", "seed", "n_pairs", "mean_pairwise_cka", "uniqueness"}, {}};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    UniquenessConfig cfg{a.splits, a.repeats, mix_seed(seed, i), {parse_kernel(a.kernel), a.fraction}};
    const auto u = feature_uniqueness(layers[i], cfg, ctx.threads);
    t.rows.push_back({u.layer_id, u.seed, u.n_pairs, u.mean_pairwise_cka, u.uniqueness});
  }
  r.tables.push_back(std::move(t));
  return r;
}

// ---------------------------------------------------------------- redundancy

struct LbArgs {
  std::string manifest;
  int random_sets = 16;
};

AnalysisReport run_lb(Context& ctx, const LbArgs& a) {
  const auto volumes = load_volumes(load_manifest(a.manifest));
  const LowerBoundConfig cfg{a.random_sets, subcommand_seed(ctx.globals.seed, "redundancy lb")};
  const auto rep = slb(volumes, cfg, ctx.threads);
  AnalysisReport r;
  r.analysis = "redundancy lb";
  r.config = ctx.base_config("redundancy lb");
  r.config["manifest"] = a.manifest;
  r.config["random_sets"] = a.random_sets;
  r.results["s_lb"] = rep.value;
  ReportTable t{"per_volume", {"volume_id", "slices", "weight", "c_corr", "c_random", "ratio"}, {}};
  for (const auto& b : rep.per_volume) t.rows.push_back({b.volume_id, b.slices, b.weight, b.c_corr, b.c_random, b.value});
  r.tables.push_back(std::move(t));
  return r;
}

struct UbArgs {
  std::string manifest;
  int window = 10, bins = 64;
  std::size_t reference_cap = 256;
};

AnalysisReport run_ub(Context& ctx, const UbArgs& a) {
  const auto volumes = load_volumes(load_manifest(a.manifest));
  UpperBoundConfig cfg;
  cfg.window = a.window;
  cfg.seed = subcommand_seed(ctx.globals.seed, "redundancy ub");
  cfg.utility = {a.bins, a.reference_cap};
  const auto rep = sub(volumes, cfg, ctx.threads);
  for (const auto& w : rep.warnings) ctx.warnings.push_back(w);
  AnalysisReport r;
  r.analysis = "redundancy ub";
  r.config = ctx.base_config("redundancy ub");
  r.config["manifest"] = a.manifest;
  r.config["window"] = a.window;
  r.config["bins"] = a.bins;
  r.config["reference_cap"] = a.reference_cap;
  r.results["s_ub"] = rep.value;
  r.results["mean_worst_utility"] = rep.mean_worst_utility;
  r.results["skipped_pairs"] = rep.warnings.size();
  ReportTable t{"per_volume", {"volume_id", "reference_id", "slices", "weight", "mean_worst_utility"}, {}};
  for (const auto& b : rep.per_volume) t.rows.push_back({b.volume_id, b.reference_id, b.slices, b.weight, b.value});
  r.tables.push_back(std::move(t));
  return r;
}

struct CurveArgs {
  std::string manifest, volume, reference;
  int bins = 64, max_distance = 20;
  std::size_t reference_cap = 256;
};

AnalysisReport run_curve(Context& ctx, const CurveArgs& a) {
  const auto manifest = load_manifest(a.manifest);
  const auto volumes = load_volumes(manifest);
  if (volumes.size() < 2 && a.reference.empty())
    throw DegenerateInputError("utility curve needs a second volume as reference");
  auto index_of = [&](const std::string& id) {
    for (std::size_t i = 0; i < volumes.size(); ++i)
      if (volumes[i].volume_id == id) return i;
    throw KeyError("manifest has no volume '" + id + "'");
  };
  const std::size_t v = a.volume.empty() ? 0 : index_of(a.volume);
  const std::uint64_t seed = subcommand_seed(ctx.globals.seed, "utility-curve");
  const std::size_t ref = a.reference.empty() ? reference_volume_index(v, volumes.size(), seed) : index_of(a.reference);
  const auto curve = utility_curve(volumes[v], volumes[ref], a.max_distance, {a.bins, a.reference_cap});
  for (const auto& w : curve.warnings) ctx.warnings.push_back(w);

  AnalysisReport r;
  r.analysis = "utility-curve";
  r.config = ctx.base_config("utility-curve");
  r.config["manifest"] = a.manifest;
  r.config["volume"] = volumes[v].volume_id;
  r.config["reference"] = volumes[ref].volume_id;
  r.config["bins"] = a.bins;
  r.config["max_distance"] = a.max_distance;
  r.config["reference_cap"] = a.reference_cap;
  r.results["slice_spacing_mm"] = volumes[v].slice_spacing_mm;
  ReportTable t{"curve", {"frame_distance", "distance_mm", "mean_u", "pairs"}, {}};
  for (const auto& p : curve.points)
    t.rows.push_back({p.frame_distance, p.frame_distance * volumes[v].slice_spacing_mm, p.mean_u, p.pairs});
  r.tables.push_back(std::move(t));
  return r;
}

// --------------------------------------------------------------------- stats

struct PairArgs {
  std::string runs, a, b;
};

void add_welch(Json& results, const WelchResult& w) {
  results["t"] = w.t;
  results["dof"] = w.dof;
  results["p"] = w.p;
  results["p_display"] = format_p(w.p);
  results["mean_a"] = w.mean_a;
  results["mean_b"] = w.mean_b;
  results["std_a"] = w.std_a;
  results["std_b"] = w.std_b;
  results["n_a"] = w.n_a;
  results["n_b"] = w.n_b;
}

AnalysisReport run_pair(Context& ctx, const PairArgs& a, const std::string& name) {
  const auto runs = load_runset(a.runs);
  const auto d = relative_delta(runs, a.a, a.b);
  AnalysisReport r;
  r.analysis = name;
  r.config = ctx.base_config(name);
  r.config["runs"] = a.runs;
  r.config["group_a"] = a.a;
  r.config["group_b"] = a.b;
  r.results["task"] = runs.task_id;
  r.results["metric"] = runs.metric;
  r.results["delta_percent"] = d.delta_percent;
  if (name == "ttest") {
    add_welch(r.results, d.welch);
  } else {
    r.results["p"] = d.p;
    r.results["p_display"] = format_p(d.p);
  }
  return r;
}

AnalysisReport run_sigmatrix(Context& ctx, const std::string& runs_path) {
  const auto runs = load_runset(runs_path);
  const auto entries = significance_matrix(runs, ctx.threads);
  AnalysisReport r;
  r.analysis = "sigmatrix";
  r.config = ctx.base_config("sigmatrix");
  r.config["runs"] = runs_path;
  r.results["task"] = runs.task_id;
  r.results["metric"] = runs.metric;
  r.results["pairs"] = entries.size();
  ReportTable t{"pairs", {"row_id", "col_id", "delta_percent", "p", "p_display"}, {}};
  for (const auto& e : entries) t.rows.push_back({e.group_a, e.group_b, e.delta_percent, e.p, format_p(e.p)});
  r.tables.push_back(std::move(t));
  return r;
}

struct InterpArgs {
  std::optional<double> small_mean, small_std, large_mean, large_std;
  std::string runs, small_group, large_group;
  double n_small = 0, n_large = 0, scale = 1.0;
};

AnalysisReport run_interp(Context& ctx, const InterpArgs& a) {
  MeanStd small, large;
  if (!a.runs.empty()) {
    if (a.small_group.empty() || a.large_group.empty())
      throw SchemaError("--runs requires --small-group and --large-group");
    const auto runs = load_runset(a.runs);
    small = {sample_mean(runs.group(a.small_group)), sample_std(runs.group(a.small_group))};
    large = {sample_mean(runs.group(a.large_group)), sample_std(runs.group(a.large_group))};
  } else {
    if (!a.small_mean || !a.small_std || !a.large_mean || !a.large_std)
      throw SchemaError("give either --runs or all of --small-mean/--small-std/--large-mean/--large-std");
    small = {*a.small_mean, *a.small_std};
    large = {*a.large_mean, *a.large_std};
  }
  const auto p = interpolate_scaled(small, large, a.n_small, a.n_large, a.scale);
  AnalysisReport r;
  r.analysis = "interp";
  r.config = ctx.base_config("interp");
  r.config["n_small"] = a.n_small;
  r.config["n_large"] = a.n_large;
  r.config["scale"] = a.scale;
  r.config["small"] = {{"mean", small.mean}, {"std", small.std}};
  r.config["large"] = {{"mean", large.mean}, {"std", large.std}};
  if (!a.runs.empty()) r.config["runs"] = a.runs;
  r.results["mean"] = p.mean;
  r.results["std"] = p.std;
  r.results["lambda"] = p.lambda;
  r.results["scale"] = p.scale;
  return r;
}

struct ConvergenceArgs {
  std::string series;
  std::size_t window = 1;
  double tolerance = 0.0;
};

std::vector<double> read_series(const std::string& path) {
  const auto doc = read_json_file(path);
  const Json* arr = &doc;
  if (doc.is_object() && doc.contains("series")) arr = &doc["series"];
  if (!arr->is_array()) throw SchemaError("series file must be an array of numbers");
  std::vector<double> v;
  for (const auto& x : *arr) {
    if (!x.is_number()) throw SchemaError("series entries must be numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

AnalysisReport run_convergence(Context& ctx, const ConvergenceArgs& a) {
  const auto series = read_series(a.series);
  const auto c = time_to_convergence(series, a.window, a.tolerance);
  if (c.forced) ctx.warnings.push_back("running mean never settled within tolerance; reporting the last epoch");
  AnalysisReport r;
  r.analysis = "convergence";
  r.config = ctx.base_config("convergence");
  r.config["series"] = a.series;
  r.config["window"] = a.window;
  r.config["tolerance"] = a.tolerance;
  r.results["epoch"] = c.epoch;
  r.results["forced"] = c.forced;
  r.results["running_mean"] = c.running_mean;
  r.results["best_running_mean"] = c.best_running_mean;
  return r;
}

struct MetricsArgs {
  std::string kind, scores, runs;
  std::optional<std::uint64_t> correct, total, tp, fp, fn, n_examples, n_classes;
};

std::uint64_t required(const std::optional<std::uint64_t>& v, const char* flag) {
  if (!v) throw SchemaError(std::string("missing ") + flag);
  return *v;
}

AnalysisReport run_metrics(Context& ctx, const MetricsArgs& a) {
  AnalysisReport r;
  r.analysis = "metrics";
  r.config = ctx.base_config("metrics");
  r.config["kind"] = a.kind;
  if (a.kind == "accuracy") {
    r.config["correct"] = required(a.correct, "--correct");
    r.config["total"] = required(a.total, "--total");
    r.results["accuracy"] = accuracy(*a.correct, *a.total);
  } else if (a.kind == "dice") {
    r.config["tp"] = required(a.tp, "--tp");
    r.config["fp"] = required(a.fp, "--fp");
    r.config["fn"] = required(a.fn, "--fn");
    r.results["dice"] = dice(*a.tp, *a.fp, *a.fn);
  } else if (a.kind == "auc") {
    if (a.scores.empty()) throw SchemaError("missing --scores");
    const auto doc = read_json_file(a.scores);
    if (!doc.is_object() || !doc.contains("scores") || !doc.contains("labels"))
      throw SchemaError("scores file needs 'scores' and 'labels'");
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : doc["scores"]) {
      if (!s.is_number()) throw SchemaError("scores must be numbers");
      scores.push_back(s.get<double>());
    }
    for (const auto& l : doc["labels"]) {
      if (!l.is_number_integer()) throw SchemaError("labels must be integers");
      labels.push_back(l.get<int>());
    }
    r.config["scores"] = a.scores;
    r.results["auc"] = auc(scores, labels);
    r.results["n"] = scores.size();
  } else if (a.kind == "complexity") {
    std::uint64_t n = 0, k = 0;
    if (!a.runs.empty()) {
      const auto runs = load_runset(a.runs);
      if (!runs.n_train_examples || !runs.n_classes)
        throw SchemaError("run set lacks n_train_examples or n_classes");
      n = *runs.n_train_examples;
      k = *runs.n_classes;
      r.config["runs"] = a.runs;
      r.results["task"] = runs.task_id;
    } else {
      n = required(a.n_examples, "--n-examples");
      k = required(a.n_classes, "--n-classes");
    }
    r.config["n_examples"] = n;
    r.config["n_classes"] = k;
    r.results["examples_per_class"] = task_complexity(n, k);
  } else {
    throw SchemaError("unknown metric kind '" + a.kind + "'");
  }
  return r;
}

// ------------------------------------------------------------------- overlap

struct OverlapArgs {
  std::string correctness, sidecar;
};

AnalysisReport run_overlap(Context& ctx, const OverlapArgs& a) {
  const auto c = load_correctness(a.correctness, a.sidecar);
  const auto h = overlap_report(c);
  AnalysisReport r;
  r.analysis = "overlap";
  r.config = ctx.base_config("overlap");
  r.config["correctness"] = a.correctness;
  if (!a.sidecar.empty()) r.config["sidecar"] = a.sidecar;
  r.results["n_datapoints"] = h.n_datapoints;
  r.results["models"] = h.model_ids;
  ReportTable cells{"cells", {"mask", "label", "observed", "expected"}, {}};
  for (std::uint32_t m = 0; m < h.cells(); ++m)
    cells.rows.push_back({m, cell_label(h.model_ids, m), h.observed[m], h.expected[m]});
  ReportTable models{"models", {"model_id", "accuracy", "unique_observed", "unique_expected"}, {}};
  for (std::size_t m = 0; m < h.model_ids.size(); ++m)
    models.rows.push_back(
        {h.model_ids[m], h.accuracies[m], h.observed[h.singleton(m)], h.expected[h.singleton(m)]});
  r.tables.push_back(std::move(cells));
  r.tables.push_back(std::move(models));
  return r;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Representation-similarity, redundancy and experiment statistics toolkit", "xferlens"};
  app.require_subcommand(1);
  Context ctx;
  auto& g = ctx.globals;
  app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
  app.add_option("--output,-o", g.output, "Report destination (default stdout)");

  Runner runner;
  auto sub_cmd = [&](CLI::App* parent, const std::string& name, const std::string& desc) {
    auto* s = parent->add_subcommand(name, desc);
    s->fallthrough();
    return s;
  };

  CkaArgs cka_args;
  auto* c = sub_cmd(&app, "cka", "CKA between two feature matrices (rows = examples)");
  c->add_option("--x", cka_args.x)->required();
  c->add_option("--y", cka_args.y)->required();
  c->add_option("--kernel", cka_args.kernel)->check(CLI::IsMember({"linear", "rbf"}))->capture_default_str();
  c->add_option("--bandwidth-fraction", cka_args.fraction)->check(CLI::PositiveNumber)->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_cka(x, cka_args); }; });

  ReuseArgs reuse_args;
  c = sub_cmd(&app, "reuse", "Feature reuse between pretrained and finetuned convolution layers");
  c->add_option("--pre", reuse_args.pre)->required();
  c->add_option("--post", reuse_args.post)->required();
  c->add_option("--layers", reuse_args.layers, "Leading layers to compare, 0 = all")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c->add_option("--kernel", reuse_args.kernel)->check(CLI::IsMember({"linear", "rbf"}))->capture_default_str();
  c->add_option("--bandwidth-fraction", reuse_args.fraction)->check(CLI::PositiveNumber)->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_reuse(x, reuse_args); }; });

  UniquenessArgs uniq_args;
  c = sub_cmd(&app, "uniqueness", "Feature uniqueness of convolution layers");
  c->add_option("--weights", uniq_args.weights)->required();
  c->add_option("--layers", uniq_args.layers, "Leading layers to analyze, 0 = all")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c->add_option("--splits", uniq_args.splits)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  c->add_option("--repeats", uniq_args.repeats)->check(CLI::Range(1, 1 << 20))->capture_default_str();
  c->add_option("--kernel", uniq_args.kernel)->check(CLI::IsMember({"linear", "rbf"}))->capture_default_str();
  c->add_option("--bandwidth-fraction", uniq_args.fraction)->check(CLI::PositiveNumber)->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_uniqueness(x, uniq_args); }; });

  auto* red = sub_cmd(&app, "redundancy", "Dataset scale-factor bounds");
  red->require_subcommand(1);
  LbArgs lb_args;
  c = sub_cmd(red, "lb", "Compressibility lower bound");
  c->add_option("--manifest", lb_args.manifest)->required();
  c->add_option("--random-sets", lb_args.random_sets)->check(CLI::Range(1, 1 << 20))->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_lb(x, lb_args); }; });
  UbArgs ub_args;
  c = sub_cmd(red, "ub", "Mutual-information upper bound");
  c->add_option("--manifest", ub_args.manifest)->required();
  c->add_option("--window", ub_args.window)->check(CLI::Range(1, 1 << 20))->capture_default_str();
  c->add_option("--bins", ub_args.bins)->check(CLI::Range(2, 65535))->capture_default_str();
  c->add_option("--reference-cap", ub_args.reference_cap)->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_ub(x, ub_args); }; });

  CurveArgs curve_args;
  c = sub_cmd(&app, "utility-curve", "Mean slice utility against frame distance");
  c->add_option("--manifest", curve_args.manifest)->required();
  c->add_option("--volume", curve_args.volume, "Volume id (default: first entry)")->capture_default_str();
  c->add_option("--reference", curve_args.reference, "Reference volume id (default: seeded choice)")
      ->capture_default_str();
  c->add_option("--bins", curve_args.bins)->check(CLI::Range(2, 65535))->capture_default_str();
  c->add_option("--max-distance", curve_args.max_distance)->check(CLI::Range(1, 1 << 20))->capture_default_str();
  c->add_option("--reference-cap", curve_args.reference_cap)->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_curve(x, curve_args); }; });

  PairArgs ttest_args, delta_args;
  c = sub_cmd(&app, "ttest", "Welch's t-test between two run groups");
  c->add_option("--runs", ttest_args.runs)->required();
  c->add_option("--group-a", ttest_args.a)->required();
  c->add_option("--group-b", ttest_args.b)->required();
  c->callback([&] { runner = [&](Context& x) { return run_pair(x, ttest_args, "ttest"); }; });
  c = sub_cmd(&app, "delta", "Relative performance difference with its p-value");
  c->add_option("--runs", delta_args.runs)->required();
  c->add_option("--group-a", delta_args.a)->required();
  c->add_option("--group-b", delta_args.b)->required();
  c->callback([&] { runner = [&](Context& x) { return run_pair(x, delta_args, "delta"); }; });

  std::string sig_runs;
  c = sub_cmd(&app, "sigmatrix", "Pairwise significance matrix of all run groups");
  c->add_option("--runs", sig_runs)->required();
  c->callback([&] { runner = [&](Context& x) { return run_sigmatrix(x, sig_runs); }; });

  OverlapArgs overlap_args;
  c = sub_cmd(&app, "overlap", "Exclusive-correctness histogram with independence baseline");
  c->add_option("--correctness", overlap_args.correctness)->required();
  c->add_option("--sidecar", overlap_args.sidecar, "Row names for a TNSR correctness matrix")->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_overlap(x, overlap_args); }; });

  InterpArgs interp_args;
  c = sub_cmd(&app, "interp", "Performance at a scaled dataset size");
  c->add_option("--small-mean", interp_args.small_mean)->capture_default_str();
  c->add_option("--small-std", interp_args.small_std)->capture_default_str();
  c->add_option("--large-mean", interp_args.large_mean)->capture_default_str();
  c->add_option("--large-std", interp_args.large_std)->capture_default_str();
  c->add_option("--runs", interp_args.runs)->capture_default_str();
  c->add_option("--small-group", interp_args.small_group)->capture_default_str();
  c->add_option("--large-group", interp_args.large_group)->capture_default_str();
  c->add_option("--n-small", interp_args.n_small)->required();
  c->add_option("--n-large", interp_args.n_large)->required();
  c->add_option("--scale", interp_args.scale)->required();
  c->callback([&] { runner = [&](Context& x) { return run_interp(x, interp_args); }; });

  ConvergenceArgs conv_args;
  c = sub_cmd(&app, "convergence", "Epoch at which the running mean settles");
  c->add_option("--series", conv_args.series)->required();
  c->add_option("--window", conv_args.window)
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30))
      ->capture_default_str();
  c->add_option("--tolerance", conv_args.tolerance)->check(CLI::NonNegativeNumber)->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_convergence(x, conv_args); }; });

  MetricsArgs metric_args;
  c = sub_cmd(&app, "metrics", "Accuracy, DICE, AUC or task complexity");
  c->add_option("--kind", metric_args.kind)
      ->required()
      ->check(CLI::IsMember({"accuracy", "dice", "auc", "complexity"}));
  c->add_option("--correct", metric_args.correct)->capture_default_str();
  c->add_option("--total", metric_args.total)->capture_default_str();
  c->add_option("--tp", metric_args.tp)->capture_default_str();
  c->add_option("--fp", metric_args.fp)->capture_default_str();
  c->add_option("--fn", metric_args.fn)->capture_default_str();
  c->add_option("--scores", metric_args.scores, "JSON file with 'scores' and 'labels'")->capture_default_str();
  c->add_option("--runs", metric_args.runs, "Run set carrying n_train_examples and n_classes")->capture_default_str();
  c->add_option("--n-examples", metric_args.n_examples)->capture_default_str();
  c->add_option("--n-classes", metric_args.n_classes)->capture_default_str();
  c->callback([&] { runner = [&](Context& x) { return run_metrics(x, metric_args); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    ctx.threads = resolve_threads(g.threads);
    const auto report = runner(ctx);
    const auto bytes = render_report(report, g.format == "csv" ? ReportFormat::csv : ReportFormat::json);
    for (const auto& w : ctx.warnings) err << "warning: " << w << "\n";
    if (g.output.empty()) {
      out << bytes;
      out.flush();
    } else {
      std::ofstream f(g.output, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot open " + g.output + " for writing");
      f << bytes;
      if (!f) throw IoError("write failed on " + g.output);
    }
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed structured text: " << e.what() << "\n";
    return kExitInput;
  } catch (const AnalysisError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace xferlens::cli
