// dynrec: streaming diffusion recommender driver.
//
//   dynrec stats    --dataset u.data
//   dynrec run      --dataset u.data --algorithms static,aaf,aas --output report.csv
//   dynrec verify   --events 200
//   dynrec snapshot save --dataset u.data --at 40000 --snapshot state.bin
//   dynrec snapshot load --dataset u.data --snapshot state.bin --output rest.csv

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dynrec/dynrec.hpp"

namespace {

enum Exit : int { kOk = 0, kOther = 1, kConfig = 2, kParse = 3, kVerify = 4, kSnapshot = 5 };

struct DatasetOptions {
  std::string path;
  std::string format = "ratings-tsv";
  int rating_threshold = 2;
  std::string field_order;
  std::string delimiter = "\t";
  std::size_t skip_lines = 0;

  dynrec::io::DatasetSpec spec() const {
    dynrec::io::DatasetSpec s;
    s.path = path;
    s.format = dynrec::io::parse_format(format);
    s.rating_threshold = rating_threshold;
    s.fields = field_order.empty() ? dynrec::io::FieldOrder::for_format(s.format)
                                   : dynrec::io::FieldOrder::parse(field_order, s.format);
    if (delimiter == "\\t" || delimiter == "tab") s.delimiter = '\t';
    else if (delimiter.size() == 1) s.delimiter = delimiter[0];
    else throw dynrec::ConfigError("delimiter must be a single character");
    s.skip_lines = skip_lines;
    return s;
  }
};

struct RunOptions {
  std::vector<std::string> algorithms{"static", "aaf", "aas"};
  double test_fraction = 0.10;
  std::size_t checkpoint_interval = 5000;
  std::size_t start_threshold = 5000;
  std::vector<std::size_t> ks{100, 300, 500};
  std::optional<double> lambda;
  std::uint64_t seed = 42;
  std::string warm_start = "exact-init";
  std::size_t dense_cap = dynrec::kDefaultDenseItemCap;
  bool no_timing = false;
  std::string output = "-";

  dynrec::StreamConfig config() const {
    dynrec::StreamConfig c;
    c.algorithms.clear();
    for (const auto& a : algorithms) c.algorithms.push_back(dynrec::parse_algorithm(a));
    c.checkpoint_interval = checkpoint_interval;
    c.start_threshold = start_threshold;
    c.ks = ks;
    c.hybrid_lambda = lambda;
    c.seed = seed;
    if (warm_start == "exact-init") c.warm_start = dynrec::WarmStart::ExactInit;
    else if (warm_start == "replay") c.warm_start = dynrec::WarmStart::Replay;
    else throw dynrec::ConfigError("warm start must be exact-init or replay");
    c.dense_cap = dense_cap;
    c.measure_time = !no_timing;
    c.validate();
    return c;
  }

  dynrec::SplitSpec split() const { return {test_fraction, seed}; }
};

void add_dataset_options(CLI::App* app, DatasetOptions& d) {
  app->add_option("--dataset", d.path, "Rating log or pairs file")->required();
  app->add_option("--format", d.format, "ratings-tsv or pairs-tsv")->capture_default_str();
  app->add_option("--rating-threshold", d.rating_threshold, "Keep ratings strictly above this")->capture_default_str();
  app->add_option("--field-order", d.field_order, "e.g. user,item,rating,timestamp");
  app->add_option("--delimiter", d.delimiter, "Field separator (\\t for tab)");
  app->add_option("--skip-lines", d.skip_lines, "Header lines to skip")->capture_default_str();
}

void add_run_options(CLI::App* app, RunOptions& r) {
  app->add_option("--algorithms", r.algorithms, "Subset of static,aaf,aas,random")->delimiter(',')->capture_default_str();
  app->add_option("--test-fraction", r.test_fraction, "Held-out share of edges")->capture_default_str();
  app->add_option("--checkpoint-interval", r.checkpoint_interval, "Edges between checkpoints")->capture_default_str();
  app->add_option("--start-threshold", r.start_threshold, "Edges before the first checkpoint")->capture_default_str();
  app->add_option("--ks", r.ks, "Cut-offs for precision and recall")->delimiter(',')->capture_default_str();
  app->add_option("--lambda", r.lambda, "Hybrid weight on mass diffusion (desk scale for adaptive engines)");
  app->add_option("--seed", r.seed, "Seed for the split and random scorer")->capture_default_str();
  app->add_option("--warm-start", r.warm_start, "exact-init or replay")->capture_default_str();
  app->add_option("--dense-cap", r.dense_cap, "Largest item count for dense operations")->capture_default_str();
  app->add_flag("--no-timing", r.no_timing, "Write 0 for per-event cost (byte-stable reports)");
}

struct Inputs {
  dynrec::Split split;
  dynrec::StreamConfig cfg;
  std::uint64_t digest = 0;
};

Inputs load_inputs(const DatasetOptions& d, const RunOptions& r) {
  Inputs in;
  in.cfg = r.config();
  const auto events = dynrec::io::parse_ratings(d.spec());
  in.split = dynrec::split_edges(events, r.split());
  in.digest = dynrec::io::config_digest(in.cfg, in.split.train, in.split.test);
  if (dynrec::io::ingest_stats(events).items > in.cfg.dense_cap) {
    std::cerr << "warning: item count exceeds dense cap; static comparator scores by per-user diffusion";
    if (in.cfg.hybrid_lambda) std::cerr << ", hybrid scoring from adaptive stores is unavailable";
    std::cerr << '\n';
  }
  return in;
}

void emit_report(const std::vector<dynrec::CheckpointReport>& reports, const RunOptions& r) {
  if (r.output == "-") {
    dynrec::io::write_report(std::cout, reports, r.ks);
  } else {
    dynrec::io::write_report(reports, r.ks, r.output);
  }
}

void save(const dynrec::StreamRunner& runner, const Inputs& in, const std::string& path) {
  dynrec::io::Snapshot snap;
  snap.config_digest = in.digest;
  snap.state = runner.state();
  dynrec::io::save_snapshot(snap, path);
  std::cerr << "snapshot at " << runner.position() << " edges written to " << path << '\n';
}

int cmd_stats(const DatasetOptions& d) {
  const auto stats = dynrec::io::ingest_stats(dynrec::io::parse_ratings(d.spec()));
  std::cout << "users\t" << stats.users << '\n'
            << "items\t" << stats.items << '\n'
            << "edges\t" << stats.edges << '\n'
            << "avg_item_degree\t" << std::setprecision(6) << stats.avg_item_degree << '\n';
  return kOk;
}

int cmd_run(const DatasetOptions& d, const RunOptions& r, const std::string& snapshot_path,
            std::optional<std::size_t> snapshot_at) {
  const auto in = load_inputs(d, r);
  dynrec::StreamRunner runner(in.cfg, in.split.train, in.split.test);
  std::vector<dynrec::CheckpointReport> reports;
  bool saved = snapshot_path.empty();
  while (true) {
    if (!saved && *snapshot_at < runner.next_checkpoint()) {
      runner.seek(*snapshot_at);
      save(runner, in, snapshot_path);
      saved = true;
    }
    auto rep = runner.advance();
    if (!rep) break;
    reports.push_back(std::move(*rep));
  }
  if (!saved) {
    runner.seek(*snapshot_at);
    save(runner, in, snapshot_path);
  }
  emit_report(reports, r);
  return kOk;
}

int cmd_snapshot_save(const DatasetOptions& d, const RunOptions& r, std::size_t at, const std::string& path) {
  const auto in = load_inputs(d, r);
  dynrec::StreamRunner runner(in.cfg, in.split.train, in.split.test);
  runner.seek(at);
  save(runner, in, path);
  return kOk;
}

int cmd_snapshot_load(const DatasetOptions& d, const RunOptions& r, const std::string& path) {
  const auto in = load_inputs(d, r);
  auto snap = dynrec::io::load_snapshot(path);
  if (snap.config_digest != in.digest) {
    throw dynrec::SnapshotError("snapshot was taken with a different dataset or configuration");
  }
  std::vector<dynrec::CheckpointReport> reports;
  try {
    auto runner = dynrec::StreamRunner::resume(in.cfg, in.split.train, in.split.test, std::move(snap.state));
    while (auto rep = runner.advance()) reports.push_back(std::move(*rep));
  } catch (const dynrec::InconsistencyError& e) {
    throw dynrec::SnapshotError(e.what());
  }
  emit_report(reports, r);
  return kOk;
}

int cmd_verify(const dynrec::verify::VerifySpec& spec) {
  const auto s = dynrec::verify::run_verify(spec);
  std::cout << "events\t" << s.events << '\n'
            << "oracle_max_deviation\t" << s.oracle_max_deviation << '\n'
            << "aas_max_error\t" << s.aas_max_error << '\n'
            << "aas_positions_outside_type4\t" << s.aas_positions_outside_type4 << '\n'
            << "aas_max_magnitude_mismatch\t" << s.aas_max_magnitude_mismatch << '\n';
  for (const auto& f : s.failures) std::cerr << "FAIL: " << f << '\n';
  std::cout << (s.ok() ? "ok" : "failed") << '\n';
  return s.ok() ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming diffusion recommender on bipartite user-item graphs"};
  app.require_subcommand(1);
  // Keys live under a section per subcommand: [run], [snapshot.save], ...
  app.set_config("--config", "", "INI/TOML file of option values; command-line flags win");
  app.fallthrough();

  DatasetOptions data;
  RunOptions run;

  auto* stats = app.add_subcommand("stats", "Print user, item and edge counts of a dataset");
  add_dataset_options(stats, data);

  std::string run_snapshot;
  std::optional<std::size_t> run_snapshot_at;
  auto* run_cmd = app.add_subcommand("run", "Stream a dataset through the engines and write the checkpoint report");
  add_dataset_options(run_cmd, data);
  add_run_options(run_cmd, run);
  run_cmd->add_option("--output", run.output, "Report CSV path, - for stdout")->capture_default_str();
  auto* snap_opt = run_cmd->add_option("--snapshot", run_snapshot, "Also write a snapshot here");
  run_cmd->add_option("--snapshot-at", run_snapshot_at, "Edges fed when the snapshot is taken")->needs(snap_opt);
  snap_opt->needs(run_cmd->get_option("--snapshot-at"));

  dynrec::verify::VerifySpec vspec;
  auto* verify = app.add_subcommand("verify", "Fuzz the exact oracle and audit second-order residue");
  verify->add_option("--events", vspec.fuzz.events, "Events per trial")->capture_default_str();
  verify->add_option("--trials", vspec.trials, "Independent random streams")->capture_default_str();
  verify->add_option("--users", vspec.fuzz.max_users, "User label pool")->capture_default_str();
  verify->add_option("--items", vspec.fuzz.max_items, "Item label pool")->capture_default_str();
  verify->add_option("--removal-rate", vspec.fuzz.removal_rate, "Share of removal events")->capture_default_str();
  verify->add_option("--seed", vspec.seed)->capture_default_str();
  verify->add_option("--tolerance", vspec.tolerance)->capture_default_str();

  auto* snapshot = app.add_subcommand("snapshot", "Save or resume engine state");
  snapshot->require_subcommand(1);
  std::string snap_path;
  std::size_t snap_at = 0;
  auto* snap_save = snapshot->add_subcommand("save", "Feed the stream up to --at edges and save");
  add_dataset_options(snap_save, data);
  add_run_options(snap_save, run);
  snap_save->add_option("--at", snap_at, "Edges to feed before saving")->required();
  snap_save->add_option("--snapshot", snap_path, "Output file")->required();
  auto* snap_load = snapshot->add_subcommand("load", "Resume a saved run and write the remaining report");
  add_dataset_options(snap_load, data);
  add_run_options(snap_load, run);
  snap_load->add_option("--snapshot", snap_path, "Snapshot file")->required()->check(CLI::ExistingFile);
  snap_load->add_option("--output", run.output, "Report CSV path, - for stdout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*stats) return cmd_stats(data);
    if (*run_cmd) return cmd_run(data, run, run_snapshot, run_snapshot_at);
    if (*verify) return cmd_verify(vspec);
    if (*snap_save) return cmd_snapshot_save(data, run, snap_at, snap_path);
    if (*snap_load) return cmd_snapshot_load(data, run, snap_path);
  } catch (const dynrec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const dynrec::SizeLimitError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const dynrec::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const dynrec::SnapshotError& e) {
    std::cerr << "snapshot error: " << e.what() << '\n';
    return kSnapshot;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
