#include "urban3d/model_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "urban3d/error.hpp"
#include "urban3d/numfmt.hpp"

namespace urban3d::models {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

constexpr int kFormatVersion = 1;

std::string link_name(Link l) { return l == Link::Logit ? "logit" : "identity"; }

void write_vector(std::ostream& os, const char* key, const VectorXd& v) {
  os << key << ' ' << v.size();
  for (Index i = 0; i < v.size(); ++i) os << ' ' << format_double(v(i));
  os << '\n';
}

void write_names(std::ostream& os, const std::vector<std::string>& names) {
  os << "names " << names.size() << '\n';
  for (const auto& n : names) os << n << '\n';
}

void header(std::ostream& os, const char* kind, const std::string& config) {
  os << "urban3d-model " << kFormatVersion << '\n' << "kind " << kind << '\n';
  std::string echo = config;
  for (char& c : echo) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  os << "config " << echo << '\n';
}

class Reader {
 public:
  Reader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  std::string line() {
    std::string s;
    if (!std::getline(is_, s)) fail("unexpected end of file");
    ++line_no_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  /// Reads "key rest" and returns rest.
  std::string keyed(const std::string& key) {
    const std::string s = line();
    if (s == key) return "";
    if (s.compare(0, key.size() + 1, key + " ") != 0) fail("expected '" + key + "'");
    return s.substr(key.size() + 1);
  }

  double number(std::istringstream& in) {
    std::string tok;
    if (!(in >> tok)) fail("missing number");
    const auto v = parse_double(tok);
    if (!v) fail("bad number '" + tok + "'");
    return *v;
  }

  long integer(std::istringstream& in) {
    const double v = number(in);
    if (v != static_cast<double>(static_cast<long>(v))) fail("expected an integer");
    return static_cast<long>(v);
  }

  VectorXd vector(const std::string& key) {
    std::istringstream in(keyed(key));
    const long n = integer(in);
    if (n < 0) fail("negative length");
    VectorXd v(n);
    for (long i = 0; i < n; ++i) v(i) = number(in);
    return v;
  }

  double scalar(const std::string& key) {
    std::istringstream in(keyed(key));
    return number(in);
  }

  std::vector<std::string> names() {
    std::istringstream in(keyed("names"));
    const long n = integer(in);
    std::vector<std::string> out;
    for (long i = 0; i < n; ++i) out.push_back(line());
    return out;
  }

  Link link() {
    const std::string s = keyed("link");
    if (s == "identity") return Link::Identity;
    if (s == "logit") return Link::Logit;
    fail("unknown link '" + s + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError(source_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& is_;
  std::string source_;
  int line_no_ = 0;
};

}  // namespace

void save_model(std::ostream& os, const LinearModel& m, const std::string& config) {
  header(os, "linear", config);
  os << "link " << link_name(m.link) << '\n';
  write_names(os, m.names);
  os << "intercept " << format_double(m.intercept) << '\n';
  write_vector(os, "coefficients", m.coefficients);
  write_vector(os, "mean", m.standardizer.mean);
  write_vector(os, "sd", m.standardizer.sd);
  os << "std_intercept " << format_double(m.std_intercept) << '\n';
  write_vector(os, "std_coefficients", m.std_coefficients);
  os << "end\n";
}

void save_model(std::ostream& os, const RandomForest& m, const std::string& config) {
  header(os, "forest", config);
  os << "task " << (m.task() == ForestTask::Classification ? "classification" : "regression") << '\n';
  os << "features " << m.n_features() << '\n';
  os << "trees " << m.trees().size() << '\n';
  for (const Tree& t : m.trees()) {
    os << "tree " << t.size() << '\n';
    for (const TreeNode& n : t) {
      os << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
         << format_double(n.value) << '\n';
    }
  }
  os << "end\n";
}

void save_model(std::ostream& os, const SemParams& m, const std::string& config) {
  header(os, "sem", config);
  os << "link " << link_name(m.link) << '\n';
  write_names(os, m.names);
  os << "intercept " << format_double(m.intercept) << '\n';
  write_vector(os, "beta", m.beta);
  os << "sigma2 " << format_double(m.sigma2) << '\n';
  os << "phi " << format_double(m.phi) << '\n';
  os << "tau2 " << format_double(m.tau2) << '\n';
  os << "planar " << (m.planar ? 1 : 0) << '\n';
  os << "knots " << m.knots.size() << '\n';
  for (const auto& k : m.knots) {
    os << format_double(k.x) << ' ' << format_double(k.y) << ' ' << format_double(k.z) << '\n';
  }
  write_vector(os, "knot_effects", m.knot_effects);
  os << "log_likelihood " << format_double(m.log_likelihood) << '\n';
  os << "evaluations " << m.evaluations << '\n';
  os << "end\n";
}

AnyModel load_model(std::istream& is, const std::string& source, std::string* config) {
  Reader r(is, source);
  {
    std::istringstream in(r.keyed("urban3d-model"));
    if (r.integer(in) != kFormatVersion) r.fail("unsupported format version");
  }
  const std::string kind = r.keyed("kind");
  if (kind != "linear" && kind != "forest" && kind != "sem") r.fail("unknown model kind '" + kind + "'");
  const std::string echo = r.keyed("config");
  if (config) *config = echo;

  AnyModel out;
  if (kind == "linear") {
    LinearModel m;
    m.link = r.link();
    m.names = r.names();
    m.intercept = r.scalar("intercept");
    m.coefficients = r.vector("coefficients");
    m.standardizer.mean = r.vector("mean");
    m.standardizer.sd = r.vector("sd");
    m.std_intercept = r.scalar("std_intercept");
    m.std_coefficients = r.vector("std_coefficients");
    out = std::move(m);
  } else if (kind == "forest") {
    const std::string task = r.keyed("task");
    if (task != "classification" && task != "regression") r.fail("unknown task '" + task + "'");
    std::istringstream fin(r.keyed("features"));
    const long p = r.integer(fin);
    std::istringstream tin(r.keyed("trees"));
    const long n_trees = r.integer(tin);
    std::vector<Tree> trees;
    for (long t = 0; t < n_trees; ++t) {
      std::istringstream hin(r.keyed("tree"));
      const long size = r.integer(hin);
      if (size < 1) r.fail("empty tree");
      Tree tree(static_cast<std::size_t>(size));
      for (auto& node : tree) {
        std::istringstream in(r.line());
        node.feature = static_cast<std::int32_t>(r.integer(in));
        node.threshold = r.number(in);
        node.left = static_cast<std::int32_t>(r.integer(in));
        node.right = static_cast<std::int32_t>(r.integer(in));
        node.value = r.number(in);
        if (node.feature >= p) r.fail("split feature out of range");
        if (node.feature >= 0 && (node.left <= 0 || node.left >= size || node.right <= 0 || node.right >= size)) {
          r.fail("child index out of range");
        }
      }
      trees.push_back(std::move(tree));
    }
    out = RandomForest(task == "classification" ? ForestTask::Classification : ForestTask::Regression,
                       static_cast<int>(p), std::move(trees));
  } else if (kind == "sem") {
    SemParams m;
    m.link = r.link();
    m.names = r.names();
    m.intercept = r.scalar("intercept");
    m.beta = r.vector("beta");
    m.sigma2 = r.scalar("sigma2");
    m.phi = r.scalar("phi");
    m.tau2 = r.scalar("tau2");
    m.planar = r.scalar("planar") != 0.0;
    std::istringstream kin(r.keyed("knots"));
    const long nk = r.integer(kin);
    for (long k = 0; k < nk; ++k) {
      std::istringstream in(r.line());
      geo::Point3 p;
      p.x = r.number(in);
      p.y = r.number(in);
      p.z = r.number(in);
      m.knots.push_back(p);
    }
    m.knot_effects = r.vector("knot_effects");
    if (m.knot_effects.size() != nk) r.fail("knot effect count does not match knots");
    m.log_likelihood = r.scalar("log_likelihood");
    m.evaluations = static_cast<int>(r.scalar("evaluations"));
    out = std::move(m);
  } else {
    r.fail("unknown model kind '" + kind + "'");
  }
  if (r.line() != "end") r.fail("expected 'end'");
  return out;
}

}  // namespace urban3d::models
