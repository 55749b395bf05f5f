// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/model_library.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "phdae/errors.hpp"

namespace phdae {

namespace {

using Vec3 = Eigen::Vector3d;

Vec3 particle(const Vec& q, int i) { return q.segment<3>(3 * i); }

// Shared block layout of the constrained mechanical models:
// J = [[0, I, 0], [-I, 0, -G^T], [0, G, 0]], R = diag(0, RR, 0).
Mat mechanical_J(int d, const Mat& G) {
  const int c = static_cast<int>(G.rows());
  Mat J = Mat::Zero(2 * d + c, 2 * d + c);
  J.block(0, d, d, d) = Mat::Identity(d, d);
  J.block(d, 0, d, d) = -Mat::Identity(d, d);
  J.block(d, 2 * d, d, c) = -G.transpose();
  J.block(2 * d, d, c, d) = G;
  return J;
}

Mat mechanical_R(int d, int c, const Mat& RR) {
  Mat R = Mat::Zero(2 * d + c, 2 * d + c);
  R.block(d, d, d, d) = RR;
  return R;
}

Mat velocity_input(int d, int c) {
  Mat B = Mat::Zero(2 * d + c, d);
  B.block(d, 0, d, d) = Mat::Identity(d, d);
  return B;
}

double eta(const FourParticleParams& p, const Vec& q) {
  return p.eta0 * (1.0 + p.alpha * (particle(q, 2) - particle(q, 1)).squaredNorm());
}

Mat dissipation_pattern(double e) {
  Mat RR = Mat::Zero(12, 12);
  const Mat I = e * Mat::Identity(3, 3);
  RR.block(3, 3, 3, 3) = I;
  RR.block(6, 6, 3, 3) = I;
  RR.block(3, 6, 3, 3) = -I;
  RR.block(6, 3, 3, 3) = -I;
  return RR;
}

Vec mass_diagonal(const FourParticleParams& p) {
  Vec m(12);
  for (int i = 0; i < 4; ++i) m.segment<3>(3 * i).setConstant(p.masses[i]);
  return m;
}

}  // namespace

void FourParticleParams::validate() const {
  for (double m : masses)
    if (!(m > 0.0)) throw ConfigError("four_particle: masses must be positive");
  if (!(k13 > 0.0) || !(k24 > 0.0)) throw ConfigError("four_particle: stiffnesses must be positive");
  if (!(eta0 >= 0.0) || !(alpha >= 0.0))
    throw ConfigError("four_particle: eta0 and alpha must be non-negative");
}

ScalarField four_particle_potential(const FourParticleParams& p) {
  const double k13 = p.k13, k24 = p.k24;
  auto value = [k13, k24](const Vec& q) {
    const double a = (particle(q, 2) - particle(q, 0)).squaredNorm() - 1.0;
    const double b = (particle(q, 3) - particle(q, 1)).squaredNorm() - 1.0;
    return 0.5 * k13 * a * a + 0.5 * k24 * b * b;
  };
  auto gradient = [k13, k24](const Vec& q) -> Vec {
    const Vec3 d13 = particle(q, 2) - particle(q, 0);
    const Vec3 d24 = particle(q, 3) - particle(q, 1);
    const double a = d13.squaredNorm() - 1.0;
    const double b = d24.squaredNorm() - 1.0;
    Vec g = Vec::Zero(12);
    g.segment<3>(0) = -2.0 * k13 * a * d13;
    g.segment<3>(6) = 2.0 * k13 * a * d13;
    g.segment<3>(3) = -2.0 * k24 * b * d24;
    g.segment<3>(9) = 2.0 * k24 * b * d24;
    return g;
  };
  return {12, value, gradient};
}

VectorField four_particle_constraints() {
  auto value = [](const Vec& q) -> Vec {
    Vec g(2);
    g(0) = 0.5 * ((particle(q, 1) - particle(q, 0)).squaredNorm() - 1.0);
    g(1) = 0.5 * ((particle(q, 3) - particle(q, 2)).squaredNorm() - 1.0);
    return g;
  };
  auto jacobian = [](const Vec& q) -> Mat {
    const Vec3 d12 = particle(q, 1) - particle(q, 0);
    const Vec3 d34 = particle(q, 3) - particle(q, 2);
    Mat G = Mat::Zero(2, 12);
    G.block<1, 3>(0, 0) = -d12.transpose();
    G.block<1, 3>(0, 3) = d12.transpose();
    G.block<1, 3>(1, 6) = -d34.transpose();
    G.block<1, 3>(1, 9) = d34.transpose();
    return G;
  };
  return {12, 2, value, jacobian};
}

SemiExplicitPHDAE make_four_particle(const FourParticleParams& p) {
  p.validate();
  const ScalarField V = four_particle_potential(p);
  const VectorField g = four_particle_constraints();
  const Vec mdiag = mass_diagonal(p);

  SemiExplicitPHDAE se;
  se.name = "four_particle";
  se.n1 = 24;
  se.n2 = 2;
  se.m = 12;
  Mat E11 = Mat::Identity(24, 24);
  E11.bottomRightCorner(12, 12) = mdiag.asDiagonal();
  se.E11 = [E11](const Vec&) { return E11; };
  se.H1 = {24,
           [V, mdiag](const Vec& x1) {
             const Vec v = x1.tail(12);
             return 0.5 * v.dot(mdiag.cwiseProduct(v)) + V.value(x1.head(12));
           },
           [V, mdiag](const Vec& x1) -> Vec {
             Vec gr(24);
             gr.head(12) = V.gradient(x1.head(12));
             gr.tail(12) = mdiag.cwiseProduct(x1.tail(12));
             return gr;
           }};
  se.z2 = [](const Vec& x) -> Vec { return x.tail(2); };
  se.J = [g](const Vec& x) { return mechanical_J(12, g.jacobian(x.head(12))); };
  se.R = [p](const Vec& x) { return mechanical_R(12, 2, dissipation_pattern(eta(p, x.head(12)))); };
  const Mat B = velocity_input(12, 2);
  se.B = [B](const Vec&) { return B; };
  se.constraints = ConstraintMonitor{
      [g](const Vec& x) -> Vec { return g.value(x.head(12)); },
      [g](const Vec& x) -> Vec { return g.jacobian(x.head(12)) * x.segment(12, 12); }};
  return se;
}

ConsistentApprox four_particle_approx(const FourParticleParams& p) {
  const SemiExplicitPHDAE se = make_four_particle(p);
  ConsistentApprox a = make_approx(se);
  const DiscreteJacobian dg = gonzalez_jacobian(four_particle_constraints());
  a.J_bar = [dg](const Vec& x, const Vec& xp) {
    return mechanical_J(12, dg(x.head(12), xp.head(12)));
  };
  a.z2_bar = [](const Vec&, const Vec& xp) -> Vec { return xp.tail(2); };
  a.J_mode = CoeffMode::custom;
  a.z_mode = CoeffMode::custom;
  return a;
}

Vec four_particle_initial_state() {
  Vec x = Vec::Zero(26);
  x.segment<3>(3) << 1.0, 0.0, 0.0;
  x.segment<3>(6) << 0.0, 1.0, 0.0;
  x.segment<3>(9) << 1.0, 1.0, 0.0;
  x(23) = 20.0 / 17.0;
  return x;
}

void MassSpringParams::validate() const {
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw ConfigError("mass_spring_singular: masses must be positive");
  if (!(k1 > 0.0) || !(k2 > 0.0))
    throw ConfigError("mass_spring_singular: spring constants must be positive");
}

Mat mass_spring_E(const MassSpringParams& p) {
  Mat E = Mat::Zero(7, 7);
  E.topLeftCorner(3, 3).setIdentity();
  E(3, 3) = p.m1;
  E.block(4, 4, 2, 2).setConstant(p.m2);
  return E;
}

PHDAESystem make_mass_spring_singular(const MassSpringParams& p) {
  p.validate();
  const Mat E = mass_spring_E(p);
  const Mat M = E.block(3, 3, 3, 3);
  Mat G(1, 3);
  G << -1.0, 1.0, 0.0;
  const double offset = p.l10 + p.w;

  PHDAESystem s;
  s.name = "mass_spring_singular";
  s.n = 7;
  s.m = 3;
  s.E = [E](const Vec&) { return E; };
  const Mat J = mechanical_J(3, G);
  s.J = [J](const Vec&) { return J; };
  s.R = [](const Vec&) { return Mat::Zero(7, 7).eval(); };
  const Mat B = velocity_input(3, 1);
  s.B = [B](const Vec&) { return B; };
  s.z = [p](const Vec& x) -> Vec {
    Vec z(7);
    z << p.k1 * x(0), 0.0, p.k2 * x(2), x(3), x(4), x(5), x(6);
    return z;
  };
  s.H = {7,
         [p, M](const Vec& x) {
           const Vec v = x.segment(3, 3);
           return 0.5 * v.dot(M * v) + 0.5 * p.k1 * x(0) * x(0) + 0.5 * p.k2 * x(2) * x(2);
         },
         [p, M](const Vec& x) -> Vec {
           Vec g = Vec::Zero(7);
           g(0) = p.k1 * x(0);
           g(2) = p.k2 * x(2);
           g.segment(3, 3) = M * x.segment(3, 3);
           return g;
         }};
  s.constraints = ConstraintMonitor{
      [offset](const Vec& x) -> Vec { return Vec::Constant(1, x(1) - x(0) - offset); },
      [G](const Vec& x) -> Vec { return G * x.segment(3, 3); }};
  return s;
}

Vec mass_spring_initial_state(const MassSpringParams& p) {
  Vec x = Vec::Zero(7);
  x(0) = 0.1;
  x(1) = x(0) + p.l10 + p.w;
  x(2) = -0.05;
  x(6) = p.k2 * x(2);  // lambda balancing the second spring
  return x;
}

void SyncMachineParams::validate() const {
  if (R_s.size() != 3 || R_r.size() != 3 || (R_s.array() <= 0.0).any() ||
      (R_r.array() <= 0.0).any())
    throw ConfigError("synchronous_machine: resistances must be three positive values each");
  if (!(d > 0.0) || !(J_r > 0.0)) throw ConfigError("synchronous_machine: d and J_r must be positive");
  if (!L || !L_prime) throw ConfigError("synchronous_machine: inductance missing");
  for (int i = 0; i < 64; ++i) {
    const double th = 2.0 * std::numbers::pi * i / 64.0;
    const Mat Lt = L(th);
    if (Lt.rows() != 6 || Lt.cols() != 6) throw ConfigError("synchronous_machine: L must be 6x6");
    if ((Lt - Lt.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
        Eigen::SelfAdjointEigenSolver<Mat>(Lt).eigenvalues()(0) <= 0.0)
      throw ConfigError("synchronous_machine: L(theta) is not symmetric positive definite");
  }
}

SyncMachineParams default_sync_machine_params(double L0, double eps) {
  SyncMachineParams p;
  const Mat K = Mat::Ones(6, 6) - Mat::Identity(6, 6);
  p.L = [L0, eps, K](double th) -> Mat {
    return L0 * Mat::Identity(6, 6) + eps * std::cos(2.0 * th) * K;
  };
  p.L_prime = [eps, K](double th) -> Mat { return -2.0 * eps * std::sin(2.0 * th) * K; };
  return p;
}

PHDAESystem make_synchronous_machine(const SyncMachineParams& p) {
  p.validate();
  PHDAESystem s;
  s.name = "synchronous_machine";
  s.n = 8;
  s.m = 5;
  s.E = [p](const Vec& x) -> Mat {
    const double th = x(7);
    Mat E = Mat::Identity(8, 8);
    E.topLeftCorner(6, 6) = p.L(th);
    E.block(0, 7, 6, 1) = p.L_prime(th) * x.head(6);
    return E;
  };
  Mat J = Mat::Zero(8, 8);
  J(6, 7) = -1.0;
  J(7, 6) = 1.0;
  s.J = [J](const Vec&) { return J; };
  Mat R = Mat::Zero(8, 8);
  R.diagonal().head(3) = p.R_s;
  R.diagonal().segment(3, 3) = p.R_r;
  R(6, 6) = p.d;
  s.R = [R](const Vec&) { return R; };
  Mat B = Mat::Zero(8, 5);
  B.topLeftCorner(3, 3).setIdentity();
  B(3, 3) = 1.0;
  B(6, 4) = 1.0;
  s.B = [B](const Vec&) { return B; };
  // The angle co-state carries a minus sign; with it E^T z = grad H.
  s.z = [p](const Vec& x) -> Vec {
    const Vec I = x.head(6);
    Vec z(8);
    z.head(6) = I;
    z(6) = x(6) / p.J_r;
    z(7) = -0.5 * I.dot(p.L_prime(x(7)) * I);
    return z;
  };
  s.H = {8,
         [p](const Vec& x) {
           const Vec I = x.head(6);
           return 0.5 * I.dot(p.L(x(7)) * I) + 0.5 * x(6) * x(6) / p.J_r;
         },
         [p](const Vec& x) -> Vec {
           const Vec I = x.head(6);
           Vec g(8);
           g.head(6) = p.L(x(7)) * I;
           g(6) = x(6) / p.J_r;
           g(7) = 0.5 * I.dot(p.L_prime(x(7)) * I);
           return g;
         }};
  return s;
}

PHDAESystem make_linear_index1() {
  PHDAESystem s;
  s.name = "linear_index1";
  s.n = 2;
  s.m = 0;
  s.E = [](const Vec&) { return Eigen::Vector2d(1.0, 0.0).asDiagonal().toDenseMatrix().eval(); };
  s.J = [](const Vec&) {
    Mat J(2, 2);
    J << 0.0, 1.0, -1.0, 0.0;
    return J;
  };
  s.R = [](const Vec&) { return Eigen::Vector2d(0.0, 1.0).asDiagonal().toDenseMatrix().eval(); };
  s.B = [](const Vec&) { return Mat(2, 0); };
  s.z = [](const Vec& x) { return x; };
  s.H = {2, [](const Vec& x) { return 0.5 * x(0) * x(0); },
         [](const Vec& x) -> Vec { return Eigen::Vector2d(x(0), 0.0); }};
  return s;
}

PHDAESystem make_appC_counterexample() {
  PHDAESystem s;
  s.name = "appc_counterexample";
  s.n = 2;
  s.m = 0;
  auto grad = [](const Vec& x) -> Vec {
    return Eigen::Vector2d(x(0) * std::exp(0.5 * x(0) * x(0)), x(1));
  };
  s.E = [grad](const Vec& x) -> Mat { return Vec::Ones(2) * grad(x).transpose(); };
  s.J = [](const Vec&) { return Mat::Zero(2, 2).eval(); };
  s.R = [](const Vec&) { return Mat::Zero(2, 2).eval(); };
  s.B = [](const Vec&) { return Mat(2, 0); };
  s.z = [](const Vec&) -> Vec { return Vec::Constant(2, 0.5); };
  s.H = {2, [](const Vec& x) { return std::exp(0.5 * x(0) * x(0)) - 1.0 + 0.5 * x(1) * x(1); },
         grad};
  return s;
}

// ---------------------------------------------------------------------------
// Registry

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"four_particle", "mass_spring_singular",
                                              "synchronous_machine", "linear_index1",
                                              "appc_counterexample"};
  return names;
}

namespace {

class ParamReader {
 public:
  ParamReader(std::string model, const ParamMap& overrides)
      : model_(std::move(model)), overrides_(overrides) {}

  double get(const std::string& key, double fallback) {
    used_.push_back(key);
    auto it = overrides_.find(key);
    const double v = it == overrides_.end() ? fallback : it->second;
    effective_[key] = v;
    return v;
  }

  // Rejects keys the model does not know.
  ParamMap finish() const {
    for (const auto& [key, value] : overrides_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        throw ConfigError(model_ + ": unknown parameter '" + key + "'");
    }
    return effective_;
  }

 private:
  std::string model_;
  const ParamMap& overrides_;
  std::vector<std::string> used_;
  ParamMap effective_;
};

Vec uniform(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

}  // namespace

ModelInstance make_model(const std::string& name, const ParamMap& overrides) {
  ParamReader rd(name, overrides);
  ModelInstance mi;
  mi.name = name;
  if (name == "four_particle") {
    FourParticleParams p;
    for (int i = 0; i < 4; ++i) p.masses[i] = rd.get("m" + std::to_string(i + 1), p.masses[i]);
    p.k13 = rd.get("k13", p.k13);
    p.k24 = rd.get("k24", p.k24);
    p.eta0 = rd.get("eta0", p.eta0);
    p.alpha = rd.get("alpha", p.alpha);
    SemiExplicitPHDAE se = make_four_particle(p);
    mi.system = embed_semi_explicit(se);
    mi.semi_explicit = se;
    mi.scheme_approx = four_particle_approx(p);
    mi.x0 = four_particle_initial_state();
    mi.observables = {{"q4", 9, 3}, {"v4", 21, 3}, {"lambda1", 24, 1}};
    mi.sample = [](std::mt19937_64& rng) -> Vec {
      Vec x = four_particle_initial_state() + uniform(rng, 26, -0.3, 0.3);
      x.tail(2) = uniform(rng, 2, -5.0, 5.0);
      return x;
    };
    mi.default_h = 0.01;
    mi.default_t_end = 10.0;
    mi.default_scheme = "sedg";
  } else if (name == "mass_spring_singular") {
    MassSpringParams p;
    p.m1 = rd.get("m1", p.m1);
    p.m2 = rd.get("m2", p.m2);
    p.k1 = rd.get("k1", p.k1);
    p.k2 = rd.get("k2", p.k2);
    p.l10 = rd.get("l10", p.l10);
    p.l20 = rd.get("l20", p.l20);
    p.w = rd.get("w", p.w);
    mi.system = make_mass_spring_singular(p);
    mi.constant_E = mass_spring_E(p);
    mi.x0 = mass_spring_initial_state(p);
    mi.observables = {{"q", 0, 3}, {"v", 3, 3}, {"lambda", 6, 1}};
    mi.sample = [](std::mt19937_64& rng) { return uniform(rng, 7, -2.0, 2.0); };
    mi.default_h = 0.01;
    mi.default_t_end = 1.0;
  } else if (name == "synchronous_machine") {
    SyncMachineParams p = default_sync_machine_params(rd.get("L0", 2.0), rd.get("eps", 0.1));
    p.R_s.setConstant(rd.get("R_s", p.R_s(0)));
    p.R_r.setConstant(rd.get("R_r", p.R_r(0)));
    p.d = rd.get("d", p.d);
    p.J_r = rd.get("J_r", p.J_r);
    mi.system = make_synchronous_machine(p);
    mi.pointwise_invertible_E = true;
    mi.x0 = Vec::Zero(8);
    mi.x0.head(6) << 1.0, -0.5, -0.5, 0.8, 0.1, -0.1;
    mi.x0(6) = 0.5;
    mi.observables = {{"I", 0, 6}, {"p", 6, 1}, {"theta", 7, 1}};
    mi.sample = [](std::mt19937_64& rng) -> Vec {
      Vec x = uniform(rng, 8, -2.0, 2.0);
      x(7) = uniform(rng, 1, -std::numbers::pi, std::numbers::pi)(0);
      return x;
    };
    mi.default_h = 0.01;
    mi.default_t_end = 1.0;
  } else if (name == "linear_index1") {
    mi.system = make_linear_index1();
    mi.constant_E = mi.system.E(Vec::Zero(2));
    mi.x0 = Eigen::Vector2d(1.0, -1.0);
    mi.exact = [](double t, const Vec& x0) -> Vec {
      const double x1 = x0(0) * std::exp(-t);
      return Eigen::Vector2d(x1, -x1);
    };
    mi.observables = {{"x1", 0, 1}, {"x2", 1, 1}};
    mi.sample = [](std::mt19937_64& rng) { return uniform(rng, 2, -2.0, 2.0); };
    mi.default_h = 0.1;
    mi.default_t_end = 1.0;
    mi.default_scheme = "ddr";
  } else if (name == "appc_counterexample") {
    mi.system = make_appC_counterexample();
    mi.rank_varies = true;
    mi.x0 = Eigen::Vector2d(1.0, 0.0);
    mi.observables = {{"x", 0, 2}};
    mi.sample = [](std::mt19937_64& rng) { return uniform(rng, 2, -1.5, 1.5); };
    mi.default_h = 0.1;
    mi.default_t_end = 1.0;
    mi.default_scheme = "ddr";
  } else {
    throw ConfigError("unknown model '" + name + "'");
  }
  mi.params = rd.finish();
  return mi;
}

std::vector<Vec> validation_samples(const ModelInstance& model, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  out.reserve(count + 1);
  for (int i = 0; i < count; ++i) out.push_back(model.sample(rng));
  if (model.rank_varies) out.push_back(Vec::Zero(model.system.n));
  return out;
}

}  // namespace phdae
