// cbound: margin-based risk bounds for weighted majority votes.
//
//   cbound train  --data iris.csv --rounds 100 --depth 2 --output model.json
//   cbound bounds --ensemble model.json --data test.csv [--pac-data train.csv] [--format csv]
//   cbound study  --config configs/default_study.cfg
//   cbound verify [--seed N] [--quick]
//
// Exit codes: 0 ok, 1 internal, 2 usage, 3 parse or I/O, 4 invalid input,
// 5 bound undefined, 6 degenerate, 7 verification violation.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbound/cbound.hpp"

namespace {

using namespace cbound;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Parse:
    case ErrorCategory::Io: return 3;
    case ErrorCategory::InvalidLabel:
    case ErrorCategory::Capacity:
    case ErrorCategory::DimensionMismatch:
    case ErrorCategory::CorruptVoter:
    case ErrorCategory::EmptyDataset:
    case ErrorCategory::InvalidParameter:
    case ErrorCategory::Unsupported:
    case ErrorCategory::Inconsistency: return 4;
    case ErrorCategory::BoundUndefined:
    case ErrorCategory::UndefinedCorrelation: return 5;
    case ErrorCategory::Degenerate: return 6;
  }
  return 1;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

struct DataOptions {
  std::string label_column = "last";
  bool no_header = false;

  CsvSchema schema(std::vector<std::string> classes = {}) const {
    CsvSchema s;
    s.header = !no_header;
    if (label_column != "last") {
      try {
        s.label_column = std::stoul(label_column);
      } catch (const std::exception&) {
        fail(ErrorCategory::InvalidParameter, "--label-column takes an index or 'last'");
      }
    }
    s.classes = std::move(classes);
    return s;
  }
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--label-column", d.label_column, "0-based label column index, or 'last'")->capture_default_str();
  cmd->add_flag("--no-header", d.no_header, "CSV has no header row");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Margin-based risk bounds for weighted majority votes"};
  app.require_subcommand(1);

  // train
  std::string train_data, train_out;
  BoostConfig boost;
  DataOptions train_opts;
  auto* train = app.add_subcommand("train", "Boost decision trees with SAMME and write the ensemble as JSON");
  train->add_option("--data", train_data, "Training CSV")->required();
  train->add_option("--rounds", boost.rounds, "Boosting rounds")->capture_default_str();
  train->add_option("--depth", boost.depth, "Tree depth")->capture_default_str();
  train->add_option("--min-leaf", boost.min_leaf, "Minimum examples per leaf")->capture_default_str();
  train->add_option("--seed", boost.seed, "Seed recorded with the model")->capture_default_str();
  train->add_option("--output,-o", train_out, "Output path (default stdout)");
  add_data_options(train, train_opts);

  // bounds
  std::string ens_path, eval_path, pac_path, bounds_out, format = "json", omega_list;
  double delta = 0.05;
  double b_override = 0.0;
  bool no_pac = false;
  DataOptions bound_opts;
  auto* bounds = app.add_subcommand("bounds", "Evaluate risks and bounds of an ensemble on a dataset");
  bounds->add_option("--ensemble", ens_path, "Ensemble JSON")->required();
  bounds->add_option("--data", eval_path, "Evaluation CSV")->required();
  bounds->add_option("--pac-data", pac_path, "Sample for the PAC bound (default: the evaluation CSV)");
  bounds->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  bounds->add_option("--delta", delta, "PAC confidence parameter")->capture_default_str();
  bounds->add_option("--B", b_override, "Bound on |margin| used by the PAC bound (default by space)");
  bounds->add_option("--omegas", omega_list, "Comma-separated omegas, e.g. \"1/2,1/Q\"");
  bounds->add_flag("--no-pac", no_pac, "Skip the PAC bound");
  bounds->add_option("--output,-o", bounds_out, "Output path (default stdout)");
  add_data_options(bounds, bound_opts);

  // study
  std::string config_path, study_out;
  auto* study = app.add_subcommand("study", "Run the bound-versus-risk correlation study");
  study->add_option("--config", config_path, "Study configuration file")->required();
  study->add_option("--output-dir", study_out, "Overrides output_dir from the configuration");

  // verify
  oracle::VerifyOptions vopt;
  bool quick = false;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "Run the brute-force and Monte-Carlo verification suites");
  verify->add_option("--seed", vopt.seed, "Base seed")->capture_default_str();
  verify->add_flag("--quick", quick, "Smaller suites");
  verify->add_flag("--pointwise-half", vopt.pointwise_half, "Check M >= M_{1/2} pointwise in the margin-ordering suite");
  verify->add_option("--output,-o", verify_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const auto data = load_csv(train_data, train_opts.schema());
      const auto res = train_samme(data, boost);
      auto j = ensemble_to_json(res.ensemble(), data.class_names());
      j["training"] = {{"rounds", boost.rounds},        {"depth", boost.depth},
                       {"min_leaf", boost.min_leaf},    {"seed", boost.seed},
                       {"rounds_run", res.rounds_run},  {"trees", res.trees.size()},
                       {"stopped_perfect", res.stopped_perfect}, {"stopped_weak", res.stopped_weak}};
      emit(j.dump(2) + "\n", train_out);
    } else if (*bounds) {
      const auto loaded = ensemble_from_json(read_json_file(ens_path));
      const auto& e = loaded.ensemble;
      if (e.space().kind() != SpaceKind::Multiclass) {
        fail(ErrorCategory::Unsupported, "CSV evaluation supports multiclass ensembles only");
      }
      const auto eval = load_csv(eval_path, bound_opts.schema(loaded.classes));
      if (loaded.classes.empty() && eval.space().q() > e.space().q()) {
        fail(ErrorCategory::InvalidLabel, "dataset has more classes than the ensemble");
      }
      // Without a recorded class list the dataset's first-appearance mapping is used,
      // widened to the ensemble's Q.
      auto widen = [&](const LabeledDataset& d) {
        if (d.space() == e.space()) return d;
        LabeledDataset w(e.space(), d.num_features(), d.features(), d.labels());
        w.set_class_names(d.class_names());
        return w;
      };
      const auto ev = widen(eval);
      BoundOptions opt;
      opt.delta = delta;
      opt.with_pac = !no_pac;
      if (b_override > 0.0) opt.b = b_override;
      if (!omega_list.empty()) {
        opt.omegas.clear();
        std::string item;
        for (char c : omega_list + ",") {
          if (c == ',') {
            if (!item.empty()) opt.omegas.push_back(parse_omega(item));
            item.clear();
          } else {
            item += c;
          }
        }
      }
      std::optional<LabeledDataset> pac;
      if (!pac_path.empty()) pac = widen(load_csv(pac_path, bound_opts.schema(loaded.classes)));
      const auto report = make_bound_report(e, ev, pac ? &*pac : &ev, opt);
      emit(format == "csv" ? report_to_csv(report) : report_to_json(report).dump(2) + "\n", bounds_out);
    } else if (*study) {
      auto cfg = load_study_config(config_path);
      if (!study_out.empty()) cfg.output_dir = study_out;
      if (cfg.output_dir.empty()) fail(ErrorCategory::InvalidParameter, "no output directory: set output_dir or --output-dir");
      const auto rep = run_study(cfg);
      write_study_outputs(rep, cfg.output_dir);
      auto summary = study_to_json(rep);
      summary["output_dir"] = cfg.output_dir;
      std::cout << summary.dump(2) << "\n";
      if (rep.bound_violations > 0) return 7;
    } else if (*verify) {
      if (quick) {
        vopt.binary_instances = 50;
        vopt.validity_instances = 100;
        vopt.sandwich_instances = 100;
        vopt.ordering_draws = 2000;
        vopt.change_of_measure_instances = 300;
        vopt.moment_instances = 50;
        vopt.pac.trials = 200;
      }
      const auto results = oracle::run_all_suites(vopt);
      nlohmann::json j;
      bool ok = true;
      auto suites = nlohmann::json::array();
      for (const auto& r : results) {
        suites.push_back(oracle::to_json(r));
        ok = ok && r.passed();
      }
      j["seed"] = vopt.seed;
      j["suites"] = std::move(suites);
      j["passed"] = ok;
      emit(j.dump(2) + "\n", verify_out);
      return ok ? 0 : 7;
    }
  } catch (const Error& e) {
    std::cerr << "cbound: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "cbound: internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
