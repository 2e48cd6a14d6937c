#include "urban3d/ablation.hpp"

#include <algorithm>
#include <set>
#include <cstdio>
#include <sstream>

#include "urban3d/error.hpp"
#include "urban3d/forest.hpp"
#include "urban3d/numfmt.hpp"
#include "urban3d/parallel.hpp"
#include "urban3d/random.hpp"
#include "urban3d/rose.hpp"
#include "urban3d/sem.hpp"

namespace urban3d::eval {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using feat::Showcase;

std::string to_string(Tier t) {
  switch (t) {
    case Tier::Intercept: return "Intercept";
    case Tier::D1: return "1D";
    case Tier::D2: return "2D";
    case Tier::D3: return "3D";
  }
  return "?";
}

std::vector<std::string> default_models(Showcase showcase) {
  if (showcase == Showcase::Rent) return {"OLS", "OLSNet", "RF", "SEM"};
  return {"Logit", "LgNet", "RF", "RF-ROSE", "SEM"};
}

void validate_config(const AblationConfig& cfg, Showcase showcase) {
  validate_config(cfg.split);
  models::validate_config(cfg.enet);
  if (cfg.rf_trees < 1) throw InputError("ablation: rf_trees must be >= 1");
  if (cfg.rf_min_leaf < 1) throw InputError("ablation: rf_min_leaf must be >= 1");
  if (cfg.sem_restarts < 1) throw InputError("ablation: sem_restarts must be >= 1");
  if (!(cfg.sem_tol > 0.0)) throw InputError("ablation: sem_tol must be positive");
  const auto known = default_models(showcase);
  for (const auto& m : cfg.models) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
      throw InputError("ablation: unknown model '" + m + "' for " + feat::to_string(showcase) +
                       " (expected one of " + list + ")");
    }
  }
}

namespace {

struct CellDesign {
  MatrixXd train;
  MatrixXd test;
  std::vector<std::string> names;
  std::vector<bool> categorical;
};

MatrixXd take_rows(const MatrixXd& x, const std::vector<std::size_t>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(rows[i]));
  return out;
}

VectorXd take(const std::vector<double>& v, const std::vector<std::size_t>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v[rows[i]];
  return out;
}

// Columns that are constant on the training rows carry no information and
// would make the least-squares design singular (unused dummy levels). With
// `drop_first`, each categorical keeps its first level seen in training as
// the reference, so the kept indicators never sum to the intercept.
CellDesign cell_design(const feat::FeatureTable& table, const std::vector<std::string>& columns,
                       bool drop_first, const Split& split) {
  const feat::Design d = feat::design_matrix(table, columns, false);
  const MatrixXd train = take_rows(d.x, split.train);
  std::vector<Index> keep;
  std::set<std::string> referenced;
  for (Index j = 0; j < train.cols(); ++j) {
    if (train.col(j).maxCoeff() == train.col(j).minCoeff()) continue;
    const auto& name = d.names[static_cast<std::size_t>(j)];
    const auto eq = name.find('=');
    if (drop_first && eq != std::string::npos && referenced.insert(name.substr(0, eq)).second) continue;
    keep.push_back(j);
  }
  CellDesign out;
  out.train.resize(train.rows(), static_cast<Index>(keep.size()));
  const MatrixXd test = take_rows(d.x, split.test);
  out.test.resize(test.rows(), static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.train.col(static_cast<Index>(k)) = train.col(keep[k]);
    out.test.col(static_cast<Index>(k)) = test.col(keep[k]);
    const auto& name = d.names[static_cast<std::size_t>(keep[k])];
    out.names.push_back(name);
    out.categorical.push_back(name.find('=') != std::string::npos);
  }
  return out;
}

std::vector<geo::Point3> take_sites(const std::vector<geo::Point3>& s, const std::vector<std::size_t>& rows) {
  std::vector<geo::Point3> out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back(s[i]);
  return out;
}

feat::Dim tier_dim(Tier t) {
  return t == Tier::D1 ? feat::Dim::D1 : t == Tier::D2 ? feat::Dim::D2 : feat::Dim::D3;
}

struct Context {
  const feat::FeatureTable& raw;
  feat::FeatureTable mono;
  const AblationConfig& cfg;
  Split split;
  VectorXd y_train;
  VectorXd y_test;
  std::vector<geo::Point3> sites;
  bool classify;
};

VectorXd fit_predict(const Context& c, Tier tier, const std::string& model, std::uint64_t seed) {
  using namespace urban3d::models;
  const auto columns = feat::select_tier(c.raw, tier_dim(tier));
  const Link link = c.classify ? Link::Logit : Link::Identity;

  if (model == "RF" || model == "RF-ROSE") {
    const CellDesign d = cell_design(c.raw, columns, false, c.split);
    ForestConfig fc;
    fc.n_trees = c.cfg.rf_trees;
    fc.min_leaf = c.cfg.rf_min_leaf;
    fc.seed = seed;
    const ForestTask task = c.classify ? ForestTask::Classification : ForestTask::Regression;
    if (model == "RF-ROSE") {
      const RoseSample s = rose_sample(d.train, c.y_train, derive_seed(seed, 1), d.categorical);
      return fit_random_forest(s.x, s.y, task, fc).predict(d.test);
    }
    return fit_random_forest(d.train, c.y_train, task, fc).predict(d.test);
  }

  const CellDesign d = cell_design(c.mono, columns, true, c.split);
  if (model == "OLS") return fit_ols(d.train, c.y_train, d.names).predict(d.test);
  if (model == "Logit") return fit_logistic(d.train, c.y_train, d.names).predict(d.test);
  if (model == "OLSNet" || model == "LgNet") {
    ElasticNetConfig ec = c.cfg.enet;
    ec.seed = seed;
    return fit_elastic_net(d.train, c.y_train, link, ec, d.names).model.predict(d.test);
  }
  if (model == "SEM") {
    SemConfig sc;
    sc.link = link;
    sc.n_knots = c.cfg.sem_knots;
    sc.restarts = c.cfg.sem_restarts;
    sc.tol = c.cfg.sem_tol;
    sc.seed = seed;
    // Distances are planar below the 3D tier; elevation enters only with it.
    sc.planar = tier != Tier::D3;
    const auto train_sites = take_sites(c.sites, c.split.train);
    const auto test_sites = take_sites(c.sites, c.split.test);
    const SemParams p = fit_sem(d.train, c.y_train, train_sites, sc, d.names);
    return predict_sem(p, d.test, test_sites);
  }
  throw InputError("ablation: unknown model '" + model + "'");
}

}  // namespace

AblationReport run_ablation(const feat::FeatureTable& table, const AblationConfig& cfg_in) {
  AblationConfig cfg = cfg_in;
  const Showcase showcase = table.showcase();
  if (cfg.models.empty()) cfg.models = default_models(showcase);
  validate_config(cfg, showcase);
  table.validate();

  const bool classify = showcase == Showcase::Pv;
  cfg.split.stratify = cfg.split.stratify || classify;
  cfg.split.seed = cfg.seed;
  const auto& y = table.outcome();
  Context ctx{table, feat::monotone_transform(table), cfg, split(y, cfg.split), {}, {}, feat::site_coordinates(table),
              classify};
  ctx.y_train = take(y, ctx.split.train);
  ctx.y_test = take(y, ctx.split.test);
  const std::vector<double> y_test(ctx.y_test.data(), ctx.y_test.data() + ctx.y_test.size());

  AblationReport report;
  report.showcase = showcase;
  report.metric = classify ? "AUC" : "RMSE";
  report.models = cfg.models;
  report.n_train = ctx.split.train.size();
  report.n_test = ctx.split.test.size();
  const std::size_t n_models = cfg.models.size();
  for (auto& row : report.values) row.assign(n_models, 0.0);

  {
    const std::vector<double> constant(y_test.size(), ctx.y_train.mean());
    const double v = classify ? auc(y_test, constant) : rmse(y_test, constant);
    report.values[0].assign(n_models, v);
  }

  const std::size_t n_cells = 3 * n_models;
  parallel_for(n_cells, cfg.threads, [&](std::size_t cell) {
    const auto tier = static_cast<Tier>(1 + cell / n_models);
    const std::size_t m = cell % n_models;
    const std::string& model = cfg.models[m];
    const std::uint64_t seed = derive_seed(cfg.seed, 16 * static_cast<std::uint64_t>(tier) + m);
    VectorXd pred;
    try {
      pred = fit_predict(ctx, tier, model, seed);
    } catch (const Error& e) {
      throw ModelError("ablation cell (" + to_string(tier) + ", " + model + "): " + e.what());
    }
    if (!pred.allFinite()) {
      throw ModelError("ablation cell (" + to_string(tier) + ", " + model + "): non-finite predictions");
    }
    const std::vector<double> p(pred.data(), pred.data() + pred.size());
    report.values[static_cast<std::size_t>(tier)][m] = classify ? auc(y_test, p) : rmse(y_test, p);
  });

  for (std::size_t t = 0; t < 4; ++t) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < n_models; ++m) {
      const double v = report.values[t][m], b = report.values[t][best];
      if (report.lower_is_better() ? v < b : v > b) best = m;
    }
    report.best[t] = best;
  }
  return report;
}

double rmse_improvement(double lower, double upper) { return (lower - upper) / lower; }

std::optional<double> auc_improvement(double lower, double upper) {
  if (!(lower > 0.5)) return std::nullopt;
  return (upper - lower) / (lower - 0.5);
}

std::vector<std::optional<double>> relative_improvement(const AblationReport& r) {
  std::vector<std::optional<double>> out;
  for (std::size_t m = 0; m < r.models.size(); ++m) {
    double lower = r.values[0][m];
    for (std::size_t t = 1; t < 3; ++t) {
      const double v = r.values[t][m];
      lower = r.lower_is_better() ? std::min(lower, v) : std::max(lower, v);
    }
    const double upper = r.values[3][m];
    if (r.lower_is_better()) {
      out.push_back(rmse_improvement(lower, upper));
    } else {
      out.push_back(auc_improvement(lower, upper));
    }
  }
  return out;
}

std::string render_csv(const AblationReport& r) {
  std::ostringstream os;
  os << "tier";
  for (const auto& m : r.models) os << ',' << m;
  os << ",best\n";
  for (std::size_t t = 0; t < 4; ++t) {
    os << to_string(kTiers[t]);
    for (double v : r.values[t]) os << ',' << format_double(v);
    os << ',' << r.models[r.best[t]] << '\n';
  }
  os << "improvement_3d";
  for (const auto& v : relative_improvement(r)) os << ',' << (v ? format_double(*v) : "");
  os << ",\n";
  return os.str();
}

std::string render_markdown(const AblationReport& r) {
  auto fixed = [](double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  const int digits = r.lower_is_better() ? 2 : 4;
  std::ostringstream os;
  os << "| " << r.metric << " |";
  for (const auto& m : r.models) os << ' ' << m << " |";
  os << "\n|---|";
  for (std::size_t m = 0; m < r.models.size(); ++m) os << "---:|";
  os << '\n';
  for (std::size_t t = 0; t < 4; ++t) {
    os << "| " << to_string(kTiers[t]) << " |";
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      os << ' ' << fixed(r.values[t][m], digits) << (r.best[t] == m ? "†" : "") << " |";
    }
    os << '\n';
  }
  os << "| 3D vs best lower tier |";
  for (const auto& v : relative_improvement(r)) os << ' ' << (v ? fixed(100.0 * *v, 1) + "%" : "n/a") << " |";
  os << "\n\n† best prediction method in the row. Train rows: " << r.n_train
     << ", test rows: " << r.n_test << ".\n";
  return os.str();
}

}  // namespace urban3d::eval
