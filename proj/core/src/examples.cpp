#include "llfilter/examples.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include <json.hpp>

#include "llfilter/error.hpp"

namespace llf {

namespace {

using nlohmann::json;

Matrix zeros(int d) { return Matrix::Zero(d, d); }

DiffusionModel example1_model(const ExampleParams& q) {
  const double a = q.a;
  const double s = q.sigma;
  DiffusionModel m;
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = [a](double t, const Vector& x) { return Vector{a * t * x}; };
  m.drift_jac = [a](double t, const Vector&) {
    return Matrix::Constant(1, 1, a * t);
  };
  m.drift_dt = [a](double, const Vector& x) { return Vector{a * x}; };
  m.drift_hess = [](double, const Vector&) { return Hessians{zeros(1)}; };
  m.diffusion = [s](double t, const Vector& x) {
    return Matrix::Constant(1, 1, s * std::sqrt(t) * x(0));
  };
  m.diffusion_jac = [s](double t, const Vector&) {
    return std::vector<Matrix>{Matrix::Constant(1, 1, s * std::sqrt(t))};
  };
  m.diffusion_dt = [s](double t, const Vector& x) {
    return Matrix::Constant(1, 1, s * x(0) / (2.0 * std::sqrt(t)));
  };
  m.diffusion_hess = [](double, const Vector&) {
    return std::vector<Hessians>{Hessians{zeros(1)}};
  };
  return m;
}

DiffusionModel example2_model(const ExampleParams& q) {
  const double a = q.a;
  const double p = q.p;
  const double s1 = q.sigma1;
  const double s2 = q.sigma2;
  DiffusionModel m;
  m.dim = 1;
  m.noise_dim = 2;
  m.drift = [a](double t, const Vector& x) { return Vector{a * t * x}; };
  m.drift_jac = [a](double t, const Vector&) {
    return Matrix::Constant(1, 1, a * t);
  };
  m.drift_dt = [a](double, const Vector& x) { return Vector{a * x}; };
  m.drift_hess = [](double, const Vector&) { return Hessians{zeros(1)}; };
  m.diffusion = [=](double t, const Vector&) {
    Matrix g(1, 2);
    g << s1 * std::pow(t, p) * std::exp(a * t * t / 2.0), s2 * std::sqrt(t);
    return g;
  };
  m.diffusion_jac = [](double, const Vector&) {
    return std::vector<Matrix>{zeros(1), zeros(1)};
  };
  m.diffusion_dt = [=](double t, const Vector&) {
    Matrix g(1, 2);
    g << s1 * (p * std::pow(t, p - 1.0) + a * std::pow(t, p + 1.0)) *
             std::exp(a * t * t / 2.0),
        s2 / (2.0 * std::sqrt(t));
    return g;
  };
  m.diffusion_hess = [](double, const Vector&) {
    return std::vector<Hessians>{Hessians{zeros(1)}, Hessians{zeros(1)}};
  };
  return m;
}

// Van der Pol oscillator; `random_frequency` selects the multiplicative
// noise variant (ex4), otherwise the additive random input (ex3).
DiffusionModel van_der_pol_model(const ExampleParams& q,
                                 bool random_frequency) {
  const double a = random_frequency ? 0.0 : q.a;
  const double w = random_frequency ? q.varpi : 1.0;
  const double s = q.sigma;
  DiffusionModel m;
  m.dim = 2;
  m.noise_dim = 1;
  m.drift = [=](double, const Vector& x) {
    return Vector{{x(1), -(x(0) * x(0) - 1.0) * x(1) - w * x(0) + a}};
  };
  m.drift_jac = [=](double, const Vector& x) {
    Matrix j(2, 2);
    j << 0.0, 1.0, -2.0 * x(0) * x(1) - w, 1.0 - x(0) * x(0);
    return j;
  };
  m.drift_dt = [](double, const Vector&) { return Vector{Vector::Zero(2)}; };
  m.drift_hess = [](double, const Vector& x) {
    Matrix h2(2, 2);
    h2 << -2.0 * x(1), -2.0 * x(0), -2.0 * x(0), 0.0;
    return Hessians{zeros(2), h2};
  };
  if (random_frequency) {
    m.diffusion = [s](double, const Vector& x) {
      return Matrix{Matrix{{0.0}, {s * x(0)}}};
    };
    m.diffusion_jac = [s](double, const Vector&) {
      Matrix j = zeros(2);
      j(1, 0) = s;
      return std::vector<Matrix>{j};
    };
  } else {
    m.diffusion = [s](double, const Vector&) {
      return Matrix{Matrix{{0.0}, {s}}};
    };
    m.diffusion_jac = [](double, const Vector&) {
      return std::vector<Matrix>{zeros(2)};
    };
  }
  m.diffusion_dt = [](double, const Vector&) {
    return Matrix{Matrix::Zero(2, 1)};
  };
  m.diffusion_hess = [](double, const Vector&) {
    return std::vector<Hessians>{Hessians{zeros(2), zeros(2)}};
  };
  return m;
}

AdaptiveConfig tolerances(double rtol, double atol_y, double atol_p) {
  AdaptiveConfig c;
  c.rtol_y = rtol;
  c.rtol_p = rtol;
  c.atol_y = atol_y;
  c.atol_p = atol_p;
  return c;
}

Vector json_vector(const json& j, const char* key) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) {
    throw ConfigError(std::string(key) + ": expected a number or an array");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix json_matrix(const json& j, const char* key) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(std::string(key) +
                      ": expected a number or an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string(key) + ": ragged matrix");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

}  // namespace

const std::vector<std::string>& example_ids() {
  static const std::vector<std::string> ids{"ex1", "ex2", "ex3", "ex4"};
  return ids;
}

bool is_example_id(const std::string& id) {
  for (const auto& e : example_ids()) {
    if (e == id) return true;
  }
  return false;
}

ExampleParams ExampleParams::defaults(const std::string& id) {
  ExampleParams q;
  if (id == "ex1") {
    q.a = -0.1;
    q.sigma = 0.1;
    q.t0 = 0.5;
    q.obs_variance = 1e-4;
    q.x0 = Vector::Constant(1, 1.0);
    q.q0 = Matrix::Constant(1, 1, 1.0);
  } else if (id == "ex2") {
    q.a = -0.25;
    q.p = 2.0;
    q.sigma1 = 5.0;
    q.sigma2 = 0.1;
    q.t0 = 0.01;
    q.obs_variance = 1e-4;
    q.x0 = Vector::Constant(1, 10.0);
    q.q0 = Matrix::Constant(1, 1, 100.0);
  } else if (id == "ex3" || id == "ex4") {
    if (id == "ex3") {
      q.a = 0.5;
      q.sigma = 0.75;
    } else {
      q.varpi = 1.0;
      q.sigma = 1.0;
    }
    q.t0 = 0.0;
    q.obs_variance = 1e-3;
    q.x0 = Vector{{1.0, 1.0}};
    q.q0 = q.x0 * q.x0.transpose();
  } else {
    throw ConfigError("unknown example id '" + id + "'");
  }
  return q;
}

ExampleSetup make_example(const std::string& id, const ExampleParams& params,
                          int n_obs) {
  if (n_obs < 2) throw ConfigError("make_example: need at least 2 observations");
  ExampleSetup e;
  e.id = id;
  e.params = params;
  int d = 1;
  if (id == "ex1") {
    e.model = example1_model(params);
    e.path_scheme = PathScheme::kEuler;
    e.reference = tolerances(5e-9, 5e-9, 5e-12);
    const double a = params.a;
    const double s = params.sigma;
    e.exact = [a, s](const MomentState& st, double t1) {
      const auto [y, q] =
          exact_predict_example1(st.y(0), st.p(0, 0), st.t, t1, a, s);
      return MomentState{t1, Vector::Constant(1, y), Matrix::Constant(1, 1, q)};
    };
  } else if (id == "ex2") {
    e.model = example2_model(params);
    e.path_scheme = PathScheme::kLocalLinear;
    e.reference = tolerances(5e-8, 5e-8, 5e-11);
    const ExampleParams q = params;
    e.exact = [q](const MomentState& st, double t1) {
      const auto [y, p2] = exact_predict_example2(
          st.y(0), st.p(0, 0), st.t, t1, q.a, q.p, q.sigma1, q.sigma2);
      return MomentState{t1, Vector::Constant(1, y),
                         Matrix::Constant(1, 1, p2)};
    };
  } else if (id == "ex3") {
    d = 2;
    e.model = van_der_pol_model(params, false);
    e.path_scheme = PathScheme::kLocalLinear;
    e.reference = tolerances(5e-8, 5e-8, 5e-11);
  } else if (id == "ex4") {
    d = 2;
    e.model = van_der_pol_model(params, true);
    e.path_scheme = PathScheme::kEuler;
    e.reference = tolerances(1e-7, 1e-7, 1e-10);
  } else {
    throw ConfigError("unknown example id '" + id + "'");
  }

  if (params.x0.size() != d || params.q0.rows() != d || params.q0.cols() != d) {
    throw DimensionError("example '" + id + "' expects x0 of length " +
                         std::to_string(d) + " and Q0 of size " +
                         std::to_string(d) + "x" + std::to_string(d));
  }
  Matrix c = Matrix::Zero(1, d);
  c(0, 0) = 1.0;
  std::vector<double> times;
  for (int k = 0; k < n_obs; ++k) times.push_back(params.t0 + k);
  e.obs = make_observation_model(c, Matrix::Constant(1, 1, params.obs_variance),
                                 std::move(times));
  validate_observation_model(e.obs, d);
  e.init = FilterInit{params.x0, params.q0, false};
  return e;
}

ExampleSetup make_example(const std::string& id) {
  return make_example(id, ExampleParams::defaults(id));
}

ModelFile parse_model_file(std::istream& is, const AdaptiveConfig& adaptive) {
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("model file: ") + ex.what());
  }
  if (!j.is_object()) throw ConfigError("model file: expected a JSON object");
  if (!j.contains("example") || !j["example"].is_string()) {
    throw ConfigError("model file: missing string field 'example'");
  }
  ModelFile out;
  out.example = j["example"].get<std::string>();
  out.params = ExampleParams::defaults(out.example);
  out.adaptive = adaptive;

  try {
    auto num = [&](const char* key, double& dst) {
      if (j.contains(key)) dst = j[key].get<double>();
    };
    ExampleParams& q = out.params;
    num("a", q.a);
    num("sigma", q.sigma);
    num("sigma1", q.sigma1);
    num("sigma2", q.sigma2);
    num("p", q.p);
    num("varpi", q.varpi);
    num("t0", q.t0);
    num("Sigma", q.obs_variance);
    if (j.contains("x0")) q.x0 = json_vector(j["x0"], "x0");
    if (j.contains("Q0")) {
      q.q0 = json_matrix(j["Q0"], "Q0");
    } else if (j.contains("x0")) {
      q.q0 = q.x0 * q.x0.transpose();
    }

    AdaptiveConfig& c = out.adaptive;
    num("rtol_y", c.rtol_y);
    num("atol_y", c.atol_y);
    num("rtol_P", c.rtol_p);
    num("atol_P", c.atol_p);
    num("h_min", c.h_min);
    num("prs", c.prs);
    if (j.contains("h_max")) c.h_max = j["h_max"].get<double>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("model file: ") + ex.what());
  }
  out.adaptive.validate();
  return out;
}

ModelFile load_model_file(const std::string& path,
                          const AdaptiveConfig& adaptive) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  return parse_model_file(in, adaptive);
}

}  // namespace llf
