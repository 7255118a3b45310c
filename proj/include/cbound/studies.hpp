#pragma once

// Dataset ingestion, train/test splitting, Pearson correlation, and the
// bound-versus-risk correlation study over boosted tree ensembles.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cbound/bounds.hpp"
#include "cbound/ensemble.hpp"
#include "cbound/error.hpp"
#include "cbound/format.hpp"
#include "cbound/learners.hpp"
#include "cbound/report.hpp"
#include "cbound/serialization.hpp"
#include "cbound/summation.hpp"

namespace cbound {

// ---------------------------------------------------------------- CSV input

struct CsvSchema {
  std::optional<std::size_t> label_column;  ///< default: last column
  bool header = true;
  std::vector<std::size_t> feature_columns;  ///< default: every non-label column
  std::vector<std::string> classes;          ///< fixed label mapping; default: first-appearance order
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool is_missing(const std::string& cell) {
  if (cell.empty() || cell == "?") return true;
  std::string low;
  for (char c : cell) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return low == "na" || low == "nan" || low == "null";
}

}  // namespace detail

/// Parses numeric features plus one categorical label column. Labels are
/// remapped to 0..Q-1 in order of first appearance unless schema.classes fixes the mapping.
inline LabeledDataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& source = "<csv>") {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool seen_header = !schema.header;
  std::vector<std::size_t> feature_cols = schema.feature_columns;
  std::size_t label_col = 0;
  std::map<std::string, std::size_t> class_index;
  std::vector<std::string> class_names = schema.classes;
  for (std::size_t i = 0; i < class_names.size(); ++i) class_index[class_names[i]] = i;
  const bool fixed_classes = !schema.classes.empty();

  std::vector<double> features;
  std::vector<std::size_t> labels;
  auto where = [&](std::size_t col) {
    return source + ": row " + std::to_string(line_no) + ", column " + std::to_string(col + 1);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_fields(line);
    if (width == 0) {
      width = fields.size();
      if (width < 2) fail(ErrorCategory::Parse, source + ": need at least one feature column and a label column");
      label_col = schema.label_column.value_or(width - 1);
      if (label_col >= width) fail(ErrorCategory::Parse, source + ": label column " + std::to_string(label_col) + " out of range");
      if (feature_cols.empty()) {
        for (std::size_t c = 0; c < width; ++c) {
          if (c != label_col) feature_cols.push_back(c);
        }
      }
      for (auto c : feature_cols) {
        if (c >= width || c == label_col) fail(ErrorCategory::Parse, source + ": bad feature column " + std::to_string(c));
      }
    }
    if (fields.size() != width) {
      fail(ErrorCategory::Parse, source + ": row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(width));
    }
    if (!seen_header) {
      seen_header = true;
      continue;
    }
    for (auto c : feature_cols) {
      const auto& cell = fields[c];
      if (detail::is_missing(cell)) fail(ErrorCategory::Parse, "missing value at " + where(c));
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        fail(ErrorCategory::Parse, "unparseable number '" + cell + "' at " + where(c));
      }
      features.push_back(v);
    }
    const auto& lab = fields[label_col];
    if (detail::is_missing(lab)) fail(ErrorCategory::Parse, "missing label at " + where(label_col));
    auto it = class_index.find(lab);
    if (it == class_index.end()) {
      if (fixed_classes) fail(ErrorCategory::Parse, "unknown label '" + lab + "' at " + where(label_col));
      it = class_index.emplace(lab, class_names.size()).first;
      class_names.push_back(lab);
    }
    labels.push_back(it->second);
  }
  if (labels.empty()) fail(ErrorCategory::EmptyDataset, source + ": no data rows");
  if (class_names.size() < 2) fail(ErrorCategory::Degenerate, source + ": only one class present");

  const auto space = OutputSpace::multiclass(class_names.size());
  std::vector<Label> ls;
  ls.reserve(labels.size());
  for (auto l : labels) ls.push_back(Label::cls(l));
  LabeledDataset data(space, feature_cols.size(), std::move(features), std::move(ls));
  data.set_class_names(std::move(class_names));
  return data;
}

inline LabeledDataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, path);
}

// ---------------------------------------------------------------- splitting

struct Split {
  LabeledDataset train;
  LabeledDataset test;
  bool stratified = false;
};

/// Seeded shuffle split. Stratified by class when every class has at least
/// two examples; otherwise a plain shuffle, reported through `stratified`.
inline Split split(const LabeledDataset& data, double ratio, std::uint64_t seed) {
  const std::size_t m = data.size();
  if (m < 2) fail(ErrorCategory::InvalidParameter, "splitting needs at least 2 examples");
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCategory::InvalidParameter, "split ratio must lie in (0,1)");
  const std::size_t n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(ratio * static_cast<double>(m))), 1, m - 1);
  std::mt19937_64 rng(seed);

  const bool multiclass = data.space().kind() == SpaceKind::Multiclass;
  std::vector<std::vector<std::size_t>> by_class;
  if (multiclass) {
    by_class.resize(data.space().q());
    for (std::size_t i = 0; i < m; ++i) by_class[data.label(i).index()].push_back(i);
  }
  bool stratify = multiclass;
  for (const auto& members : by_class) {
    if (members.size() < 2) stratify = false;
  }

  std::vector<std::size_t> train, test;
  if (stratify) {
    // Largest-remainder allocation of n_train across classes.
    std::vector<std::size_t> quota(by_class.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t given = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      const double exact = static_cast<double>(n_train) * static_cast<double>(by_class[c].size()) / static_cast<double>(m);
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      given += quota[c];
      rem.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; given < n_train && k < rem.size(); ++k, ++given) ++quota[rem[k].second];
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto members = by_class[c];
      std::shuffle(members.begin(), members.end(), rng);
      const std::size_t q = std::clamp<std::size_t>(quota[c], 1, members.size() - 1);
      train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q));
      test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(q), members.end());
    }
    std::shuffle(train.begin(), train.end(), rng);
    std::shuffle(test.begin(), test.end(), rng);
  } else {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  return {data.subset(train), data.subset(test), stratify};
}

// ---------------------------------------------------------------- Pearson

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorCategory::DimensionMismatch, "pearson inputs differ in length");
  if (xs.size() < 2) fail(ErrorCategory::UndefinedCorrelation, "pearson needs at least 2 points");
  const double n = static_cast<double>(xs.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx.value() / n, my = sy.value() / n;
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx.value() > 0.0) || !(syy.value() > 0.0)) fail(ErrorCategory::UndefinedCorrelation, "pearson input is constant");
  return std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
}

// ---------------------------------------------------------------- study

struct StudyConfig {
  std::vector<std::string> datasets;
  CsvSchema schema;
  double split_ratio = 0.5;
  std::uint64_t seed = 1;
  std::vector<std::size_t> rounds{100, 250, 500, 1000};
  std::vector<std::size_t> depths{2, 3, 4, 5};
  std::vector<OmegaSpec> omegas = default_omegas();
  double delta = 0.05;
  std::size_t min_leaf = 1;
  std::string output_dir;
};

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& value, const std::string& key) {
  std::vector<T> out;
  for (const auto& item : split_fields(value)) {
    if (item.empty()) continue;
    T v{};
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
      fail(ErrorCategory::Parse, "bad value '" + item + "' for " + key);
    }
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorCategory::Parse, key + " must not be empty");
  return out;
}

template <class T>
T parse_scalar(const std::string& value, const std::string& key) {
  auto v = parse_list<T>(value, key);
  if (v.size() != 1) fail(ErrorCategory::Parse, key + " takes a single value");
  return v[0];
}

inline bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorCategory::Parse, "bad boolean '" + value + "' for " + key);
}

}  // namespace detail

/// Flat `key = value` document; `#` starts a comment. Relative dataset paths
/// and output_dir resolve against `base_dir`.
///
///   datasets     = data/iris.csv, data/wine.csv
///   label_column = last            (or a 0-based index)
///   header       = true
///   split_ratio  = 0.5
///   seed         = 1
///   rounds       = 100, 250, 500, 1000
///   depths       = 2, 3, 4, 5
///   omegas       = 1/2, 1/3+1/(3Q), 1/6+2/(3Q), 1/Q
///   delta        = 0.05
///   min_leaf     = 1
///   output_dir   = study_out
inline StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  StudyConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).lexically_normal().string();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorCategory::Parse, "config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(std::string_view(t).substr(0, eq));
    const auto value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key == "datasets") {
      cfg.datasets.clear();
      for (const auto& p : detail::split_fields(value)) {
        if (!p.empty()) cfg.datasets.push_back(resolve(p));
      }
    } else if (key == "label_column") {
      if (value == "last") {
        cfg.schema.label_column.reset();
      } else {
        cfg.schema.label_column = detail::parse_scalar<std::size_t>(value, key);
      }
    } else if (key == "header") {
      cfg.schema.header = detail::parse_bool(value, key);
    } else if (key == "split_ratio") {
      cfg.split_ratio = detail::parse_scalar<double>(value, key);
    } else if (key == "seed") {
      cfg.seed = detail::parse_scalar<std::uint64_t>(value, key);
    } else if (key == "rounds") {
      cfg.rounds = detail::parse_list<std::size_t>(value, key);
    } else if (key == "depths") {
      cfg.depths = detail::parse_list<std::size_t>(value, key);
    } else if (key == "omegas") {
      cfg.omegas.clear();
      for (const auto& o : detail::split_fields(value)) {
        if (!o.empty()) cfg.omegas.push_back(parse_omega(o));
      }
    } else if (key == "delta") {
      cfg.delta = detail::parse_scalar<double>(value, key);
    } else if (key == "min_leaf") {
      cfg.min_leaf = detail::parse_scalar<std::size_t>(value, key);
    } else if (key == "output_dir") {
      cfg.output_dir = resolve(value);
    } else {
      fail(ErrorCategory::Parse, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_study_config(ss.str(), std::filesystem::path(path).parent_path());
}

inline void validate(const StudyConfig& cfg) {
  if (cfg.datasets.empty()) fail(ErrorCategory::InvalidParameter, "study needs at least one dataset");
  if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) fail(ErrorCategory::InvalidParameter, "split_ratio must lie in (0,1)");
  if (cfg.rounds.empty() || cfg.depths.empty() || cfg.omegas.empty()) {
    fail(ErrorCategory::InvalidParameter, "rounds, depths and omegas must be nonempty");
  }
  for (auto r : cfg.rounds) {
    if (r < 1 || r > 10000) fail(ErrorCategory::InvalidParameter, "rounds must lie in 1..10000");
  }
  for (auto d : cfg.depths) {
    if (d < 1 || d > kMaxTreeDepth) fail(ErrorCategory::InvalidParameter, "depths must lie in 1..8");
  }
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) fail(ErrorCategory::InvalidParameter, "delta must lie in (0,1]");
}

struct StudyRow {
  std::string dataset;
  std::size_t rounds = 0;
  std::size_t depth = 0;
  std::size_t voters = 0;  ///< trees retained by boosting
  std::size_t m_train = 0;
  bool excluded = false;
  std::string note;
  std::optional<BoundReport> report;  ///< bounds on the test half, PAC bound on the training half
  bool c_bound_holds = true;          ///< C-bound on T >= margin-rule risk on T, when defined
};

struct Correlation {
  std::string quantity;
  std::optional<double> value;
  std::size_t n = 0;
  std::string status = "ok";
};

struct DatasetInfo {
  std::string path;
  std::size_t m = 0;
  std::size_t q = 0;
  std::size_t num_features = 0;
  std::vector<std::string> classes;
  bool stratified = false;
  std::size_t m_train = 0;
  std::size_t m_test = 0;
};

struct OrderingCheck {
  std::string name;
  std::optional<bool> holds;  ///< absent when a needed correlation is undefined
  std::string detail;
};

struct StudyReport {
  StudyConfig config;
  std::vector<DatasetInfo> datasets;
  std::vector<StudyRow> rows;
  std::vector<std::string> quantities;
  std::vector<Correlation> correlations;
  std::vector<OrderingCheck> ordering;
  std::size_t excluded = 0;
  std::size_t bound_violations = 0;
};

/// Worker count from CBOUND_THREADS; defaults to the hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("CBOUND_THREADS")) {
    std::size_t n = 0;
    auto res = std::from_chars(env, env + std::strlen(env), n);
    if (res.ec == std::errc{} && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled by exactly one call, so results written to slot i are order-independent.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::string quantity_for_omega(const OmegaSpec& o) { return "c_omega[" + o.text + "]"; }

inline double row_quantity(const BoundReport& r, std::size_t q) {
  // 0 gibbs_bound, 1 c_bound, 2 pac_bound, 3.. omegas
  if (q == 0) return r.gibbs_bound;
  if (q == 1) return r.c_bound_reported();
  if (q == 2) return r.pac ? r.pac->value : 1.0;
  return r.omegas[q - 3].reported();
}

}  // namespace detail

/// For every dataset x depth, boost once for max(rounds) rounds; each rounds
/// value then takes the ensemble of the trees retained by that round. Boosting
/// is deterministic, so the prefix equals a fresh run with that many rounds.
inline StudyReport run_study(const StudyConfig& cfg) {
  validate(cfg);
  StudyReport rep;
  rep.config = cfg;

  std::vector<LabeledDataset> full;
  std::vector<Split> splits;
  for (const auto& path : cfg.datasets) {
    auto data = load_csv(path, cfg.schema);
    auto sp = split(data, cfg.split_ratio, cfg.seed);
    DatasetInfo info;
    info.path = path;
    info.m = data.size();
    info.q = data.space().q();
    info.num_features = data.num_features();
    info.classes = data.class_names();
    info.stratified = sp.stratified;
    info.m_train = sp.train.size();
    info.m_test = sp.test.size();
    rep.datasets.push_back(std::move(info));
    full.push_back(std::move(data));
    splits.push_back(std::move(sp));
  }

  const std::size_t max_rounds = *std::max_element(cfg.rounds.begin(), cfg.rounds.end());
  const std::size_t nd = cfg.datasets.size(), nt = cfg.depths.size(), nr = cfg.rounds.size();
  const std::size_t workers = thread_count();

  std::vector<std::optional<SammeResult>> boosted(nd * nt);
  std::vector<std::string> boost_errors(nd * nt);
  detail::parallel_for(nd * nt, workers, [&](std::size_t k) {
    const auto& sp = splits[k / nt];
    try {
      boosted[k] = train_samme(sp.train, BoostConfig{max_rounds, cfg.depths[k % nt], cfg.seed, cfg.min_leaf});
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::Degenerate) throw;
      boost_errors[k] = e.what();
    }
  });

  // Rows in (dataset, rounds, depth) order.
  rep.rows.resize(nd * nr * nt);
  BoundOptions opt;
  opt.omegas = cfg.omegas;
  opt.delta = cfg.delta;
  detail::parallel_for(rep.rows.size(), workers, [&](std::size_t k) {
    const std::size_t d = k / (nr * nt), r = (k / nt) % nr, t = k % nt;
    auto& row = rep.rows[k];
    const auto& sp = splits[d];
    row.dataset = std::filesystem::path(cfg.datasets[d]).stem().string();
    row.rounds = cfg.rounds[r];
    row.depth = cfg.depths[t];
    row.m_train = sp.train.size();
    const auto& b = boosted[d * nt + t];
    if (!b) {
      row.excluded = true;
      row.note = boost_errors[d * nt + t];
      return;
    }
    row.voters = b->retained_after(row.rounds);
    if (row.voters == 0) {
      row.excluded = true;
      row.note = "degenerate: no tree retained";
      return;
    }
    const auto ens = b->ensemble(row.voters);
    row.report = make_bound_report(ens, sp.test, &sp.train, opt);
    if (row.report->c_bound) row.c_bound_holds = *row.report->c_bound >= row.report->risk_margin_rule - 1e-12;
    if (b->stopped_perfect && row.voters < row.rounds) row.note = "boosting stopped early on a perfect tree";
  });

  for (const auto& row : rep.rows) {
    rep.excluded += row.excluded ? 1 : 0;
    rep.bound_violations += row.c_bound_holds ? 0 : 1;
  }

  rep.quantities = {"gibbs_bound", "c_bound", "pac_bound"};
  for (const auto& o : cfg.omegas) rep.quantities.push_back(detail::quantity_for_omega(o));
  std::vector<double> risk;
  for (const auto& row : rep.rows) {
    if (!row.excluded) risk.push_back(row.report->risk_test);
  }
  for (std::size_t q = 0; q < rep.quantities.size(); ++q) {
    Correlation c;
    c.quantity = rep.quantities[q];
    std::vector<double> xs;
    for (const auto& row : rep.rows) {
      if (!row.excluded) xs.push_back(detail::row_quantity(*row.report, q));
    }
    c.n = xs.size();
    try {
      c.value = pearson(xs, risk);
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::UndefinedCorrelation) throw;
      c.status = e.what();
    }
    rep.correlations.push_back(std::move(c));
  }

  auto corr = [&](const std::string& name) -> std::optional<double> {
    for (const auto& c : rep.correlations) {
      if (c.quantity == name) return c.value;
    }
    return std::nullopt;
  };
  {
    OrderingCheck oc{"corr(c_bound) > corr(gibbs_bound)", std::nullopt, ""};
    auto a = corr("c_bound"), b = corr("gibbs_bound");
    if (a && b) {
      oc.holds = *a > *b;
      oc.detail = format_double(*a) + " vs " + format_double(*b);
    } else {
      oc.detail = "correlation undefined";
    }
    rep.ordering.push_back(std::move(oc));
  }
  {
    OrderingCheck oc{"max corr(c_omega intermediate) > corr(c_omega[1/2])", std::nullopt, ""};
    std::optional<double> half, best;
    std::string best_name;
    for (const auto& o : cfg.omegas) {
      const auto v = corr(detail::quantity_for_omega(o));
      if (o.constant == 0.5 && o.per_q == 0.0) {
        half = v;
      } else if (v && (!best || *v > *best)) {
        best = v;
        best_name = o.text;
      }
    }
    if (half && best) {
      oc.holds = *best > *half;
      oc.detail = "omega=" + best_name + ": " + format_double(*best) + " vs omega=1/2: " + format_double(*half);
    } else {
      oc.detail = "needs omega=1/2 and at least one other omega with defined correlations";
    }
    rep.ordering.push_back(std::move(oc));
  }
  return rep;
}

// ---------------------------------------------------------------- outputs

inline std::string study_rows_csv(const StudyReport& rep) {
  std::string out;
  bool header = false;
  for (const auto& row : rep.rows) {
    if (!row.report) continue;
    if (!header) {
      std::vector<std::string> cols{"dataset", "rounds", "depth", "voters", "m_train", "c_bound_holds", "note"};
      auto rc = report_csv_columns(*row.report);
      cols.insert(cols.end(), rc.begin(), rc.end());
      out += join_csv(cols) + "\n";
      header = true;
    }
  }
  for (const auto& row : rep.rows) {
    std::vector<std::string> v{row.dataset, std::to_string(row.rounds), std::to_string(row.depth), std::to_string(row.voters),
                               std::to_string(row.m_train), row.c_bound_holds ? "1" : "0", row.note};
    if (row.report) {
      auto rv = report_csv_values(*row.report);
      v.insert(v.end(), rv.begin(), rv.end());
    }
    out += join_csv(v) + "\n";
  }
  return out;
}

inline std::string correlations_csv(const StudyReport& rep) {
  std::string out = "quantity,pearson_with_risk_test,n,status\n";
  for (const auto& c : rep.correlations) {
    out += join_csv({c.quantity, c.value ? format_double(*c.value) : "", std::to_string(c.n), c.status}) + "\n";
  }
  return out;
}

inline std::string scatter_csv(const StudyReport& rep, std::size_t quantity) {
  std::string out = "dataset,rounds,depth,risk_test," + csv_field(rep.quantities[quantity]) + "\n";
  for (const auto& row : rep.rows) {
    if (row.excluded) continue;
    out += join_csv({row.dataset, std::to_string(row.rounds), std::to_string(row.depth), format_double(row.report->risk_test),
                     format_double(detail::row_quantity(*row.report, quantity))}) +
           "\n";
  }
  return out;
}

inline std::string scatter_file_name(const std::string& quantity) {
  std::string s = "scatter_";
  for (char c : quantity) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s + ".csv";
}

/// Margins over a barycentric grid of the Q=3 simplex with true class `y`,
/// for plotting the zero-margin lines of the true margin and of omega-margins.
inline std::string simplex_margin_grid_csv(std::size_t y, std::size_t resolution, const std::vector<double>& omegas) {
  const auto space = OutputSpace::multiclass(3);
  const auto label = Label::cls(y);
  std::string out = "g0,g1,g2,margin";
  for (double w : omegas) out += ",omega_margin[" + format_double(w) + "]";
  out += "\n";
  for (std::size_t i = 0; i <= resolution; ++i) {
    for (std::size_t j = 0; i + j <= resolution; ++j) {
      const double n = static_cast<double>(resolution);
      const std::vector<double> g{static_cast<double>(i) / n, static_cast<double>(j) / n,
                                  static_cast<double>(resolution - i - j) / n};
      out += format_double(g[0]) + "," + format_double(g[1]) + "," + format_double(g[2]) + "," +
             format_double(margin_of(space, g, label));
      for (double w : omegas) out += "," + format_double(omega_margin_of(space, g, label, w));
      out += "\n";
    }
  }
  return out;
}

inline nlohmann::json study_to_json(const StudyReport& rep) {
  nlohmann::json j;
  const auto& c = rep.config;
  std::vector<std::string> om;
  for (const auto& o : c.omegas) om.push_back(o.text);
  j["config"] = {{"datasets", c.datasets}, {"split_ratio", c.split_ratio}, {"seed", c.seed}, {"rounds", c.rounds},
                 {"depths", c.depths},     {"omegas", om},                 {"delta", c.delta}, {"min_leaf", c.min_leaf}};
  auto ds = nlohmann::json::array();
  for (const auto& d : rep.datasets) {
    ds.push_back({{"path", d.path},
                  {"m", d.m},
                  {"Q", d.q},
                  {"features", d.num_features},
                  {"classes", d.classes},
                  {"stratified", d.stratified},
                  {"m_train", d.m_train},
                  {"m_test", d.m_test}});
  }
  j["datasets"] = std::move(ds);
  auto cs = nlohmann::json::array();
  for (const auto& x : rep.correlations) {
    cs.push_back({{"quantity", x.quantity}, {"pearson", x.value ? nlohmann::json(*x.value) : nlohmann::json(nullptr)},
                  {"n", x.n}, {"status", x.status}});
  }
  j["correlations"] = std::move(cs);
  auto ord = nlohmann::json::array();
  for (const auto& o : rep.ordering) {
    ord.push_back({{"check", o.name}, {"holds", o.holds ? nlohmann::json(*o.holds) : nlohmann::json(nullptr)}, {"detail", o.detail}});
  }
  j["ordering"] = std::move(ord);
  j["rows"] = rep.rows.size();
  j["excluded_rows"] = rep.excluded;
  j["c_bound_violations"] = rep.bound_violations;
  j["notes"] = {"bounds other than pac_bound are computed on the test half",
                "pac_bound uses the training half with a uniform prior over the boosted trees; those trees were fit on the same "
                "half, so the prior is not independent of that sample",
                "undefined C-bounds (first margin moment <= 0) are reported as the vacuous value 1"};
  return j;
}

/// Writes report.csv, correlations.csv, study.json, one scatter file per
/// quantity, and margin_geometry.csv into `dir`.
inline void write_study_outputs(const StudyReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_text_file((base / "report.csv").string(), study_rows_csv(rep));
  write_text_file((base / "correlations.csv").string(), correlations_csv(rep));
  write_text_file((base / "study.json").string(), study_to_json(rep).dump(2) + "\n");
  for (std::size_t q = 0; q < rep.quantities.size(); ++q) {
    write_text_file((base / scatter_file_name(rep.quantities[q])).string(), scatter_csv(rep, q));
  }
  write_text_file((base / "margin_geometry.csv").string(), simplex_margin_grid_csv(1, 30, {1.0 / 3.0, 0.5}));
}

}  // namespace cbound
