#include "cli.hpp"

#include "pipeline.hpp"
#include "run_config.hpp"

#include "superpart/features.hpp"
#include "superpart/metrics.hpp"
#include "superpart/partition_io.hpp"
#include "superpart/synth.hpp"
#include "superpart/voxel.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace superpart::cli {

namespace {

// Raw flag values; a flag only overrides the config when it was given.
struct Flags {
  std::string config, input, output, embeddings, partition, scene;
  std::uint64_t seed = 0;
  int threads = 0;
  double lambda = 0, voxel_size = 0, tau = 0, rho_intra = 0, lr = 0;
  std::size_t k = 0, feature_k = 0, points = 0, repeats = 0, steps = 0, dim = 0;
  std::string min_sizes, features, format, sweep, grid;
  bool ascii = false;
};

struct Options {
  CLI::Option *seed = nullptr, *threads = nullptr, *lambda = nullptr, *voxel_size = nullptr, *tau = nullptr,
              *rho_intra = nullptr, *lr = nullptr, *k = nullptr, *feature_k = nullptr, *points = nullptr,
              *repeats = nullptr, *steps = nullptr, *dim = nullptr, *min_sizes = nullptr, *features = nullptr,
              *format = nullptr;
};

void add_run_flags(CLI::App& app, Flags& f, Options& o) {
  app.add_option("--config", f.config, "key = value config file; flags override it")->check(CLI::ExistingFile);
  o.seed = app.add_option("--seed", f.seed, "64-bit run seed");
  o.threads = app.add_option("--threads", f.threads, "OpenMP threads (0: default)");
}

void add_pipeline_flags(CLI::App& app, Flags& f, Options& o) {
  o.lambda = app.add_option("--lambda", f.lambda, "contour regularization strength");
  o.k = app.add_option("--k", f.k, "neighbors in the k-NN graph");
  o.min_sizes = app.add_option("--min-sizes", f.min_sizes, "minimum superpoint size per level, e.g. 5,30,90");
  o.voxel_size = app.add_option("--voxel-size", f.voxel_size, "voxel edge in meters (0: no subsampling)");
  o.features = app.add_option("--features", f.features, "feature channels, comma separated, or 'all'");
  o.feature_k = app.add_option("--feature-k", f.feature_k, "neighbors for the covariance features");
}

void apply_flags(const Flags& f, const Options& o, RunConfig& cfg) {
  auto given = [](const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; };
  if (given(o.seed)) cfg.seed = f.seed;
  if (given(o.threads)) cfg.threads = f.threads;
  if (given(o.lambda)) cfg.lambda = f.lambda;
  if (given(o.k)) cfg.graph.k = f.k;
  if (given(o.min_sizes)) cfg.min_sizes = parse_min_sizes(f.min_sizes);
  if (given(o.voxel_size)) cfg.voxel_size = f.voxel_size;
  if (given(o.features)) cfg.features.channels = parse_channels(f.features);
  if (given(o.feature_k)) cfg.features.neighborhood_k = f.feature_k;
  if (given(o.tau)) cfg.transition.tau = f.tau;
  if (given(o.rho_intra)) cfg.transition.rho_intra = f.rho_intra;
  if (given(o.lr)) cfg.fit.lr = f.lr;
  if (given(o.steps)) cfg.fit.steps = f.steps;
  if (given(o.dim)) cfg.fit.out_dim = f.dim;
  if (given(o.points)) cfg.bench_points = f.points;
  if (given(o.repeats)) cfg.repeats = f.repeats;
  if (given(o.format)) cfg.format = parse_format(f.format);
}

RunConfig effective_config(const Flags& f, const Options& o) {
  RunConfig cfg;
  if (!f.config.empty()) apply_config(read_key_value_file(f.config), cfg);
  apply_flags(f, o, cfg);
  cfg.validate();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  file << text;
  if (!file) throw IoError("write failed for '" + path.string() + "'");
}

void write_sidecar(const std::string& output, const RunConfig& cfg) {
  write_text(output + ".config.txt", config_text(cfg));
}

std::uint32_t class_count(const PointCloud& cloud) {
  if (!cloud.has_labels()) throw InvalidInputError("the input cloud has no labels");
  return std::max<std::uint32_t>(cloud.num_classes, 1);
}

int cmd_partition(const Flags& f, const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = effective_config(f, o);
  const PointCloud cloud = read_ply(f.input);
  std::optional<EmbeddingMatrix> emb;
  if (!f.embeddings.empty()) emb = read_embeddings(f.embeddings);

  const PipelineResult r = run_pipeline(cloud, cfg, emb);
  for (const std::string& w : r.hierarchy.warnings) err << "warning: " << w << "\n";
  write_partition(f.output, r.point_levels, cfg.format);
  write_sidecar(f.output, cfg);

  out << cloud.size() << " points, " << r.nodes.size() << " after subsampling\n";
  for (std::size_t l = 0; l < r.hierarchy.levels.size(); ++l) {
    out << "level " << l << ": " << r.hierarchy.levels[l].n_components << " superpoints\n";
  }
  out << throughput_report(r.timings, cloud.size(), r.end_to_end_seconds).table();
  return kExitOk;
}

int cmd_eval(const Flags& f, const Options& o, std::ostream& out) {
  const RunConfig cfg = effective_config(f, o);
  const PointCloud cloud = read_ply(f.input);
  const std::uint32_t n_classes = class_count(cloud);

  if (!f.sweep.empty()) {
    const std::vector<double> grid = parse_number_list(f.grid);
    if (grid.empty()) throw InvalidInputError("--sweep needs a --grid of values");
    std::vector<PurityRow> rows;
    if (f.sweep == "voxel") {
      for (double cell : grid) {
        const VoxelPartition vp = voxel_partition_baseline(cloud, VoxelGridSpec{cell});
        const OracleReport rep = oracle_miou(vp.assignment, *cloud.labels, n_classes);
        rows.push_back({cell, rep.n_superpoints, rep.oracle_miou, rep.per_class_iou});
      }
      std::stable_sort(rows.begin(), rows.end(),
                       [](const PurityRow& a, const PurityRow& b) { return a.n_superpoints < b.n_superpoints; });
    } else {
      SweepParameter param;
      if (f.sweep == "lambda") {
        param = SweepParameter::kLambda;
      } else if (f.sweep == "min-size") {
        param = SweepParameter::kMinSize;
      } else {
        throw InvalidInputError("--sweep must be lambda, min-size or voxel");
      }
      const PipelineResult prep = prepare_nodes(cloud, cfg);
      EmbeddingMatrix F = prep.point_features;
      if (!f.embeddings.empty()) {
        F = read_embeddings(f.embeddings);
        F.validate(prep.nodes.size());
      }
      rows = purity_curve(prep.nodes, F, prep.graph, param, grid, cfg.level_configs().front());
    }
    const std::string csv = purity_csv(rows, n_classes);
    if (!f.output.empty()) {
      write_text(f.output, csv);
      write_sidecar(f.output, cfg);
    }
    out << csv;
    return kExitOk;
  }

  if (f.partition.empty()) throw InvalidInputError("eval needs --partition or --sweep");
  const LevelAssignments levels = read_partition(f.partition);
  std::vector<OracleReport> reports;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (levels[l].size() != cloud.size()) {
      throw InvalidInputError("partition level " + std::to_string(l) + " covers " +
                              std::to_string(levels[l].size()) + " points, the cloud has " +
                              std::to_string(cloud.size()));
    }
    reports.push_back(oracle_miou(levels[l], *cloud.labels, n_classes));
  }
  if (!f.output.empty()) write_text(f.output, oracle_csv(reports));
  out << oracle_table(reports);
  return kExitOk;
}

int cmd_fit(const Flags& f, const Options& o, std::ostream& out) {
  RunConfig cfg = effective_config(f, o);
  const PointCloud cloud = read_ply(f.input);
  class_count(cloud);
  const PipelineResult prep = prepare_nodes(cloud, cfg);

  TransitionConfig transition = cfg.transition;
  transition.seed = derive_seed(cfg.seed, "fit.sampling");
  FitConfig fit = cfg.fit;
  fit.seed = derive_seed(cfg.seed, "fit.init");
  const LinearEmbeddingFit result =
      fit_linear_embedding(prep.point_features, prep.graph, *prep.nodes.labels, transition, fit);

  write_embeddings(f.output, EmbeddingMatrix(result.weights));
  if (!f.embeddings.empty()) write_embeddings(f.embeddings, result.embeddings);
  std::string trajectory = "step,sampled_loss\n";
  char buf[64];
  for (std::size_t s = 0; s < result.sampled_loss.size(); ++s) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", s, result.sampled_loss[s]);
    trajectory += buf;
  }
  write_text(f.output + ".loss.csv", trajectory);
  write_sidecar(f.output, cfg);

  std::snprintf(buf, sizeof(buf), "%.6f", result.initial_full_loss);
  out << "full-edge mean loss: " << buf;
  std::snprintf(buf, sizeof(buf), "%.6f", result.final_full_loss);
  out << " -> " << buf << " after " << result.sampled_loss.size() << " steps\n";
  return kExitOk;
}

std::uint64_t fnv1a(const LevelAssignments& levels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& level : levels) {
    for (NodeId v : level) {
      for (int b = 0; b < 4; ++b) {
        h ^= (v >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

int cmd_bench(const Flags& f, const Options& o, std::ostream& out) {
  const RunConfig cfg = effective_config(f, o);
  const PointCloud cloud =
      f.input.empty() ? bench_cloud(cfg.bench_points, derive_seed(cfg.seed, "bench.scene")) : read_ply(f.input);
  const std::size_t n = cloud.size();

  std::vector<std::vector<double>> stage_seconds;
  std::vector<std::string> names;
  std::vector<double> totals;
  std::uint64_t first_digest = 0;
  bool identical = true;
  for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
    const PipelineResult r = run_pipeline(cloud, cfg);
    if (rep == 0) {
      for (const StageTiming& t : r.timings) names.push_back(t.name);
      stage_seconds.resize(names.size());
      first_digest = fnv1a(r.point_levels);
    } else {
      identical = identical && fnv1a(r.point_levels) == first_digest;
    }
    for (std::size_t s = 0; s < r.timings.size(); ++s) stage_seconds[s].push_back(r.timings[s].seconds);
    totals.push_back(r.end_to_end_seconds);
  }
  names.push_back("end_to_end");
  stage_seconds.push_back(totals);

  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  std::string csv = "stage,mean_seconds,mean_pts_per_s,min_pts_per_s,max_pts_per_s,share\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-22s %12s %18s %18s %18s %8s\n", "stage", "mean s", "mean pts/s",
                "min pts/s", "max pts/s", "share");
  std::string table = buf;
  const double total_mean = mean(totals);
  for (std::size_t s = 0; s < names.size(); ++s) {
    const auto& v = stage_seconds[s];
    const double m = mean(v);
    const double slowest = *std::max_element(v.begin(), v.end());
    const double fastest = *std::min_element(v.begin(), v.end());
    const std::string share = total_mean >= kMinTimerResolution ? std::to_string(m / total_mean) : "nan";
    csv += names[s] + "," + std::to_string(m) + "," + format_rate(n, m) + "," + format_rate(n, slowest) + "," +
           format_rate(n, fastest) + "," + share + "\n";
    std::snprintf(buf, sizeof(buf), "%-22s %12.4f %18s %18s %18s %7.1f%%\n", names[s].c_str(), m,
                  format_rate(n, m).c_str(), format_rate(n, slowest).c_str(), format_rate(n, fastest).c_str(),
                  total_mean >= kMinTimerResolution ? 100.0 * m / total_mean : 0.0);
    table += buf;
  }
  if (!f.output.empty()) {
    write_text(f.output, csv);
    write_sidecar(f.output, cfg);
  }
  out << n << " points, " << cfg.repeats << " repeats, " << omp_get_max_threads() << " threads\n" << table;
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(first_digest));
  out << "partition digest " << buf << (identical ? " (identical across repeats)\n" : " (DIFFERS across repeats)\n");
  return identical ? kExitOk : kExitInternal;
}

int cmd_synth(const Flags& f, const Options& o, std::ostream& out) {
  const RunConfig cfg = effective_config(f, o);
  SceneSpec spec = f.scene.empty() ? parse_scene_spec(parse_key_value(default_scene_spec_text()))
                                   : read_scene_spec(f.scene);
  if (o.points != nullptr && o.points->count() > 0) {
    if (f.points == 0) throw InvalidInputError("--points must be positive");
    spec.scale_density(static_cast<double>(f.points) / spec.expected_points());
  }
  const PointCloud cloud = synth_scene(derive_seed(cfg.seed, "synth"), spec);
  write_ply(f.output, cloud, f.ascii ? PlyEncoding::kAscii : PlyEncoding::kBinaryLittleEndian);
  out << "wrote " << cloud.size() << " points, " << cloud.num_classes << " classes to " << f.output << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point cloud oversegmentation by greedy parallel merging", "superpart"};
  app.require_subcommand(1);
  Flags f;
  Options po, eo, fo, bo, so;  // one set per subcommand

  CLI::App* partition = app.add_subcommand("partition", "partition a point cloud into hierarchical superpoints");
  add_run_flags(*partition, f, po);
  add_pipeline_flags(*partition, f, po);
  partition->add_option("--input", f.input, "input PLY")->required();
  partition->add_option("--output", f.output, "partition file")->required();
  partition->add_option("--embeddings", f.embeddings, "per-point embeddings to partition instead of features");
  po.format = partition->add_option("--format", f.format, "csv or bin");

  CLI::App* eval = app.add_subcommand("eval", "oracle mIoU of a partition or a parameter sweep");
  add_run_flags(*eval, f, eo);
  add_pipeline_flags(*eval, f, eo);
  eval->add_option("--input", f.input, "labeled PLY")->required();
  eval->add_option("--partition", f.partition, "partition file to score");
  eval->add_option("--output", f.output, "CSV report");
  eval->add_option("--embeddings", f.embeddings, "embeddings used by lambda/min-size sweeps");
  eval->add_option("--sweep", f.sweep, "lambda, min-size or voxel");
  eval->add_option("--grid", f.grid, "sweep values, comma separated");

  CLI::App* fit = app.add_subcommand("fit", "fit a linear embedding with the contrastive transition loss");
  add_run_flags(*fit, f, fo);
  add_pipeline_flags(*fit, f, fo);
  fit->add_option("--input", f.input, "labeled PLY")->required();
  fit->add_option("--output", f.output, "weights file")->required();
  fit->add_option("--embeddings", f.embeddings, "where to write the fitted embeddings");
  fo.tau = fit->add_option("--tau", f.tau, "affinity temperature");
  fo.rho_intra = fit->add_option("--rho-intra", f.rho_intra, "maximum share of intra edges per step");
  fo.steps = fit->add_option("--steps", f.steps, "gradient steps");
  fo.lr = fit->add_option("--lr", f.lr, "learning rate");
  fo.dim = fit->add_option("--dim", f.dim, "embedding dimension");

  CLI::App* bench = app.add_subcommand("bench", "time the raw-points-to-superpoints pipeline");
  add_run_flags(*bench, f, bo);
  add_pipeline_flags(*bench, f, bo);
  bench->add_option("--input", f.input, "PLY to time instead of a generated scene");
  bench->add_option("--output", f.output, "CSV report");
  bo.points = bench->add_option("--points", f.points, "size of the generated scene");
  bo.repeats = bench->add_option("--repeats", f.repeats, "pipeline runs");

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic labeled scene");
  add_run_flags(*synth, f, so);
  synth->add_option("--output", f.output, "output PLY")->required();
  synth->add_option("--scene", f.scene, "scene spec file (default: built-in room)")->check(CLI::ExistingFile);
  so.points = synth->add_option("--points", f.points, "rescale densities to about this many points");
  synth->add_flag("--ascii", f.ascii, "ASCII PLY instead of binary");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (partition->parsed()) return cmd_partition(f, po, out, err);
    if (eval->parsed()) return cmd_eval(f, eo, out);
    if (fit->parsed()) return cmd_fit(f, fo, out);
    if (bench->parsed()) return cmd_bench(f, bo, out);
    return cmd_synth(f, so, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvalidInputError& e) {
    err << "invalid configuration or input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IterationCapError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace superpart::cli
