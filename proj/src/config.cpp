#include "sbmes/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sbmes/error.hpp"
#include "sbmes/graph_model.hpp"

namespace sbmes {
namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<Preset> make_presets() {
  std::vector<Preset> p;
  const Vector half = vec({0.5, 0.5});
  p.push_back({"m1", Family::kMixtureOnly, half, std::nullopt,
               mat2(0.6210, 0.3382, 0.3382, 0.6210), LabelMode::kCategorical,
               "mixture-only, printed latent positions x1"});
  p.push_back({"m2", Family::kMixtureOnly, half, std::nullopt,
               mat2(0.4076, 0.1840, 0.1840, 0.4076), LabelMode::kCategorical,
               "mixture-only, printed latent positions x2"});
  p.push_back({"m3", Family::kMixtureOnly, half, std::nullopt,
               mat2(0.6024, 0.3703, 0.3703, 0.5319), LabelMode::kCategorical,
               "mixture-only, printed latent positions x3"});
  p.push_back({"m4", Family::kMixtureOnly, half, std::nullopt,
               mat2(0.3962, 0.2074, 0.2074, 0.3721), LabelMode::kCategorical,
               "mixture-only, printed latent positions x4"});
  p.push_back({"affinity1", Family::kSbm, half, mat2(0.5, 0.4, 0.4, 0.5), std::nullopt,
               LabelMode::kFixed, "balanced affinity (a, b) = (.5, .4)"});
  p.push_back({"affinity2", Family::kSbm, half, mat2(0.2, 0.15, 0.15, 0.2), std::nullopt,
               LabelMode::kFixed, "balanced affinity (a, b) = (.2, .15)"});
  p.push_back({"coreperiph3", Family::kSbm, half, mat2(0.2, 0.15, 0.15, 0.15), std::nullopt,
               LabelMode::kFixed, "core-periphery (a, b) = (.2, .15)"});
  p.push_back({"coreperiph4", Family::kSbm, half, mat2(0.5, 0.42, 0.42, 0.42), std::nullopt,
               LabelMode::kFixed, "core-periphery (a, b) = (.5, .42)"});
  Matrix b(4, 4);
  b << 0.020, 0.044, 0.002, 0.009,
       0.044, 0.115, 0.010, 0.042,
       0.002, 0.010, 0.020, 0.045,
       0.009, 0.042, 0.045, 0.117;
  Matrix x(4, 4);
  x << 0.0915, 0.1076, 0.0057, 0.0034,
       0.1076, 0.3149, 0.0056, 0.0649,
       0.0057, 0.0056, 0.0886, 0.1099,
       0.0034, 0.0649, 0.1099, 0.3173;
  p.push_back({"connectome", Family::kSbm, vec({0.28, 0.22, 0.28, 0.22}), b, x,
               LabelMode::kCategorical, "4-block connectome SBM (left/right x gray/white)"});
  return p;
}

std::vector<double> parse_reals(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, "not a number: '" + tok + "'");
    }
  }
  return out;
}

Matrix parse_matrix(const std::string& text) {
  std::vector<std::string> rows;
  boost::split(rows, text, boost::is_any_of("|"));
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) values.push_back(parse_reals(r));
  const std::size_t cols = values.empty() ? 0 : values.front().size();
  if (cols == 0) throw Error(ErrorCode::kConfig, "empty matrix");
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != cols) throw Error(ErrorCode::kConfig, "ragged matrix rows");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i][j];
  }
  return m;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<int> parse_grid(const std::string& text) {
  const std::string t = boost::trim_copy(text);
  std::vector<int> grid;
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    boost::split(parts, t, boost::is_any_of(":"));
    if (parts.size() != 3) throw Error(ErrorCode::kConfig, "n_grid range must be start:stop:step");
    const int start = std::stoi(parts[0]), stop = std::stoi(parts[1]), step = std::stoi(parts[2]);
    if (step <= 0) throw Error(ErrorCode::kConfig, "n_grid step must be positive");
    for (int n = start; n <= stop; n += step) grid.push_back(n);
    return grid;
  }
  for (double v : parse_reals(t)) grid.push_back(static_cast<int>(v));
  return grid;
}

std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> parts, out;
  boost::split(parts, text, boost::is_any_of(", \t"), boost::token_compress_on);
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

Family parse_family(const std::string& s) {
  if (s == "mixture_only") return Family::kMixtureOnly;
  if (s == "sbm") return Family::kSbm;
  throw Error(ErrorCode::kConfig, "unknown family '" + s + "'");
}

LabelMode parse_labels(const std::string& s) {
  if (s == "auto") return LabelMode::kAuto;
  if (s == "fixed") return LabelMode::kFixed;
  if (s == "categorical") return LabelMode::kCategorical;
  throw Error(ErrorCode::kConfig, "unknown label mode '" + s + "'");
}

const char* family_name(Family f) { return f == Family::kSbm ? "sbm" : "mixture_only"; }

const char* labels_name(LabelMode m) {
  switch (m) {
    case LabelMode::kAuto: return "auto";
    case LabelMode::kFixed: return "fixed";
    case LabelMode::kCategorical: return "categorical";
  }
  return "auto";
}

void resolve_model(ExperimentConfig& c, const Preset* preset, const Matrix* inline_b,
                   const Matrix* inline_x) {
  if (preset) {
    c.pi = preset->pi;
    if (c.family == Family::kSbm) {
      if (!preset->b) throw Error(ErrorCode::kConfig, "preset " + preset->name + " has no block matrix");
      c.b = *preset->b;
      c.x = canonical_latent_positions(c.b);
    } else {
      if (!preset->x) throw Error(ErrorCode::kConfig, "preset " + preset->name + " has no latent positions");
      c.x = *preset->x;
    }
    return;
  }
  if (c.family == Family::kSbm) {
    if (!inline_b) throw Error(ErrorCode::kConfig, "inline SBM model needs B");
    c.b = *inline_b;
    c.x = canonical_latent_positions(c.b);
  } else {
    if (!inline_x) throw Error(ErrorCode::kConfig, "inline mixture model needs x");
    c.x = *inline_x;
  }
}

}  // namespace

const std::vector<Preset>& builtin_presets() {
  static const std::vector<Preset> presets = make_presets();
  return presets;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : builtin_presets())
    if (p.name == name) return p;
  throw Error(ErrorCode::kConfig, "unknown preset '" + name + "'");
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {"kmeans_ase", "em_ase", "es_ase",
                                                   "kmeans_lse", "em_lse", "es_lse"};
  return methods;
}

LabelMode ExperimentConfig::resolved_labels() const {
  if (labels != LabelMode::kAuto) return labels;
  if (family == Family::kMixtureOnly || model == "inline") return LabelMode::kCategorical;
  return find_preset(model).labels;
}

void validate(const ExperimentConfig& c) {
  if (c.replications < 1) throw Error(ErrorCode::kConfig, "replications must be >= 1");
  if (c.n_grid.empty()) throw Error(ErrorCode::kConfig, "n_grid is empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] < c.blocks()) throw Error(ErrorCode::kConfig, "sample sizes must be >= K");
    if (i && c.n_grid[i] < c.n_grid[i - 1]) throw Error(ErrorCode::kConfig, "n_grid must be nondecreasing");
  }
  if (c.methods.empty()) throw Error(ErrorCode::kConfig, "no methods selected");
  for (const auto& m : c.methods) {
    const auto& known = known_methods();
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw Error(ErrorCode::kConfig, "unknown method '" + m + "'");
    }
  }
  if (!(c.tol_ase > 0.0) || !(c.tol_lse > 0.0)) throw Error(ErrorCode::kConfig, "tolerances must be positive");
  if (c.max_iter < 1) throw Error(ErrorCode::kConfig, "max_iter must be >= 1");
  if (c.x.rows() != c.pi.size()) throw Error(ErrorCode::kConfig, "latent positions and pi disagree");
  if (c.family == Family::kSbm) {
    BlockModel::create(c.b, c.pi);
  } else {
    LatentConfig{c.x, c.pi}.validate();
  }
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  const auto exp = tree.get_child_optional("experiment");
  if (!exp) throw Error(ErrorCode::kConfig, "missing [experiment] section");
  ExperimentConfig c;
  try {
    c.model = exp->get<std::string>("model");
    const Preset* preset = c.model == "inline" ? nullptr : &find_preset(c.model);
    if (auto f = exp->get_optional<std::string>("family")) {
      c.family = parse_family(*f);
    } else if (preset) {
      c.family = preset->family;
    } else {
      throw Error(ErrorCode::kConfig, "inline model needs a family");
    }
    std::optional<Matrix> inline_b, inline_x;
    if (!preset) {
      const auto model = tree.get_child_optional("model");
      if (!model) throw Error(ErrorCode::kConfig, "model = inline needs a [model] section");
      if (auto s = model->get_optional<std::string>("B")) inline_b = parse_matrix(*s);
      if (auto s = model->get_optional<std::string>("x")) inline_x = parse_matrix(*s);
      c.pi = to_vector(parse_reals(model->get<std::string>("pi")));
    }
    resolve_model(c, preset, inline_b ? &*inline_b : nullptr, inline_x ? &*inline_x : nullptr);
    c.n_grid = parse_grid(exp->get<std::string>("n_grid"));
    c.replications = exp->get<int>("replications", c.replications);
    c.methods = exp->get_optional<std::string>("methods")
                    ? parse_list(exp->get<std::string>("methods"))
                    : known_methods();
    c.seed = exp->get<std::uint64_t>("seed", c.seed);
    c.tol_ase = exp->get<double>("tol_ase", c.tol_ase);
    c.tol_lse = exp->get<double>("tol_lse", c.tol_lse);
    c.max_iter = exp->get<int>("max_iter", c.max_iter);
    c.labels = parse_labels(exp->get<std::string>("labels", "auto"));
    const std::string moments = exp->get<std::string>("moments", "model");
    if (moments != "model" && moments != "empirical") {
      throw Error(ErrorCode::kConfig, "moments must be 'model' or 'empirical'");
    }
    c.empirical_moments = moments == "empirical";
    const std::string form = exp->get<std::string>("lse_covariance", "half_both");
    if (form != "half_both" && form != "half_left") {
      throw Error(ErrorCode::kConfig, "lse_covariance must be 'half_both' or 'half_left'");
    }
    c.lse_form = form == "half_both" ? LseForm::kHalfBoth : LseForm::kHalfLeft;
    c.output = exp->get<std::string>("output", c.output);
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  return parse_config(in);
}

ExperimentConfig preset_config(const std::string& preset_name, std::vector<int> n_grid,
                               int replications, std::vector<std::string> methods,
                               std::uint64_t seed) {
  const Preset& preset = find_preset(preset_name);
  ExperimentConfig c;
  c.model = preset.name;
  c.family = preset.family;
  resolve_model(c, &preset, nullptr, nullptr);
  c.n_grid = std::move(n_grid);
  c.replications = replications;
  c.methods = std::move(methods);
  c.seed = seed;
  validate(c);
  return c;
}

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream out;
  auto real = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto matrix = [&](const Matrix& m) {
    std::string s;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i) s += " | ";
      for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? " " : "") + real(m(i, j));
    }
    return s;
  };
  out << "family=" << family_name(c.family) << '\n'
      << "model=" << c.model << '\n'
      << "B=" << matrix(c.b) << '\n'
      << "x=" << matrix(c.x) << '\n'
      << "pi=" << matrix(c.pi.transpose()) << '\n'
      << "n_grid=";
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) out << (i ? "," : "") << c.n_grid[i];
  out << "\nreplications=" << c.replications << "\nmethods=";
  for (std::size_t i = 0; i < c.methods.size(); ++i) out << (i ? "," : "") << c.methods[i];
  out << "\nseed=" << c.seed << "\ntol_ase=" << real(c.tol_ase) << "\ntol_lse=" << real(c.tol_lse)
      << "\nmax_iter=" << c.max_iter << "\nlabels=" << labels_name(c.resolved_labels())
      << "\nmoments=" << (c.empirical_moments ? "empirical" : "model")
      << "\nlse_covariance=" << (c.lse_form == LseForm::kHalfBoth ? "half_both" : "half_left") << '\n';
  return out.str();
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace sbmes
