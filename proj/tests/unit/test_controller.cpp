#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ptpp/controller.hpp"
#include "ptpp/rk4.hpp"

using namespace ptpp;

namespace {

constexpr double kPiD = 3.14159265358979323846;

std::vector<StageGains> em_gains() {
  std::vector<StageGains> g(3);
  for (auto& s : g) {
    s.delta = s.sigma = s.rho = s.tau = 1e10;
    s.varpi = 10;
    s.mu = 10;
    s.varrho = 10;
    s.lambda = 1e-5;
  }
  g[2].varpi = 5e3;
  return g;
}

std::vector<StageGains> moderate_gains(std::size_t n) {
  std::vector<StageGains> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i].delta = 0.7 + i;
    g[i].sigma = 1.3 + i;
    g[i].rho = 0.4 + i;
    g[i].tau = 2.1 + i;
    g[i].varpi = 3.0 + i;
    g[i].mu = 1.5;
    g[i].varrho = 2.5 + i;
    g[i].lambda = 0.01 * (i + 1);
  }
  return g;
}

// Independent re-derivation of one chain evaluation. Constant Lipschitz
// rates, the 11-rule scalar grid, symmetric tangent transform.
struct Oracle {
  std::vector<double> gl, gu, L;
  std::vector<StageGains> g;
  double a, b, c, h, T;
  bool adaptive;
  bool xi_root_gamma = true;

  double eta(double t) const { return t >= T ? c : a * std::exp(-b * std::pow(T / (T - t), h)) + c; }
  double eta_dot(double t) const {
    if (t >= T) return 0.0;
    const double q = T / (T - t);
    return -a * b * h * std::pow(q, h) / (T - t) * std::exp(-b * std::pow(q, h));
  }
  static std::vector<double> phi(double y) {
    std::vector<double> m(11);
    double s = 0;
    for (int j = 0; j < 11; ++j) {
      const double v = -20.0 + 4 * j;
      m[j] = 10 * std::exp(-(y - v) * (y - v) / 10);
      s += m[j];
    }
    for (auto& v : m) v /= s;
    return m;
  }

  struct Out {
    std::vector<double> z, alpha, beta;
    double u;
  };

  Out run(const std::vector<double>& x, const std::vector<double>& s,
          const std::vector<std::vector<double>>& th, double t, double yr, double yrd) const {
    const std::size_t n = x.size();
    Out o;
    o.z.assign(n, 0);
    o.alpha.assign(n - 1, 0);
    o.beta.assign(n, 0);
    const double et = eta(t);
    const double e = x[0] - yr;
    const double z1 = std::tan(kPiD / 2 * std::atan(e) / et);
    const double psi = kPiD * (1 + z1 * z1) / (2 * et);
    const double vphi = std::pow(std::cos(2 / kPiD * et * std::atan(z1)), 2);
    const auto p = phi(yr);
    double pp = 0, pt = 0;
    for (int j = 0; j < 11; ++j) pp += p[j] * p[j];
    auto est = [&](std::size_t k, double lead) {
      if (!adaptive) return lead * pp;
      double acc = 0;
      for (int j = 0; j < 11; ++j) acc += p[j] * th[k][j];
      return acc;
    };
    const double w = z1 * vphi * psi;
    const double b1 = est(0, w) - yrd - 2 / (kPiD * vphi) * eta_dot(t) * std::atan(z1);
    const double ch1 = L[0] * std::abs(x[0] - yr);
    o.z[0] = z1;
    o.beta[0] = b1;
    o.alpha[0] = -w * b1 * b1 / (gl[0] * std::sqrt(w * w * b1 * b1 + g[0].delta * g[0].delta)) -
                 w * ch1 * ch1 / (gl[0] * std::sqrt(w * w * ch1 * ch1 + g[0].sigma * g[0].sigma)) -
                 w / gl[0] - g[0].varpi * z1 / (2 * gl[0] * vphi * psi);
    double prev_zeta = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const double zi = x[i] - s[i - 1];
      const double ri = s[i - 1] - o.alpha[i - 1];
      const double sg = zi > 0 ? 1.0 : (zi < 0 ? -1.0 : 0.0);
      const double zt = 1 / (1 + zi * zi) + g[i].varrho * sg;
      const double bi = est(i, zt) - (o.alpha[i - 1] - s[i - 1]) / g[i].lambda;
      double nrm = 0;
      for (std::size_t k = 0; k <= i; ++k) nrm += (x[k] - yr) * (x[k] - yr);
      const double chi_i = L[i] * std::sqrt(nrm);
      const double cpl = (i == 1) ? w : prev_zeta;
      const double gam = gu[i - 1] * std::abs(cpl * zi) / zt;
      const double xi = gu[i - 1] * std::abs(cpl * ri) / zt;
      const double root = xi_root_gamma ? gam : xi;
      auto sat = [&](double v, double guard) {
        return -zt * v * v / (gl[i] * std::sqrt(zt * zt * v * v + guard * guard));
      };
      const double v = sat(bi, g[i].delta) + sat(chi_i, g[i].sigma) + sat(gam, g[i].rho) -
                       zt * xi * xi / (gl[i] * std::sqrt(zt * zt * root * root + g[i].tau * g[i].tau)) -
                       g[i].varpi * (std::atan(zi) + g[i].varrho * std::abs(zi)) / (gl[i] * zt) -
                       zt / gl[i];
      o.z[i] = zi;
      o.beta[i] = bi;
      if (i + 1 < n) o.alpha[i] = v; else o.u = v;
      prev_zeta = zt;
    }
    return o;
  }
};

ControlChain em_chain(ControlMode mode, XiDenominator denom = XiDenominator::Gamma) {
  ControllerConfig cfg;
  cfg.mode = mode;
  cfg.gains = em_gains();
  cfg.xi_denominator = denom;
  return ControlChain(make_electromechanical().metadata(), electromechanical_reference(),
                      ErrorTransform(perf_from_terminal(0.1, 0.05, 1.0, 0.5)), cfg);
}

Oracle em_oracle(bool adaptive) {
  const ElectromechanicalParams p;
  const double M = p.inertia_term(), N = p.gravity_term(), B = p.friction_term();
  const auto perf = perf_from_terminal(0.1, 0.05, 1.0, 0.5);
  return Oracle{{0.1, 0.1, 0.1},
                {10, 10, 10},
                {1.0, (N + B) / M, (p.K_B + p.R) / (M * p.L)},
                em_gains(),
                perf.a(), 0.1, 0.05, 1.0, 0.5,
                adaptive};
}

void expect_rel(double got, double want, double tol, const std::string& what) {
  EXPECT_LE(std::abs(got - want), tol * std::max(1.0, std::abs(want))) << what << " got " << got
                                                                        << " want " << want;
}

}  // namespace

TEST(Zeta, Examples) {
  EXPECT_EQ(zeta(0.0, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(zeta(1.0, 10.0), 10.5);
  EXPECT_DOUBLE_EQ(zeta(-1.0, 10.0), -9.5);
}

TEST(Zeta, MagnitudeBoundedAwayFromZero) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uz(-50, 50), ur(1.0 + 1e-9, 20);
  for (int k = 0; k < 1000000; ++k) {
    const double z = uz(rng), r = ur(rng);
    const double v = zeta(z, r);
    ASSERT_GE(std::abs(v), std::min(r - 1.0, 1.0)) << z << " " << r;
    if (z > 0) ASSERT_GE(v, r);
    if (z < 0) ASSERT_LE(v, 1.0 - r);
  }
}

TEST(Zeta, SmoothingReplacesSign) {
  EXPECT_DOUBLE_EQ(zeta(0.3, 4.0, 0.1), 1 / 1.09 + 4.0 * std::tanh(3.0));
  EXPECT_EQ(zeta(0.0, 4.0, 0.1), 1.0);
}

TEST(SaturatedTerm, Examples) {
  EXPECT_EQ(saturated_term(0.0, 3.0), 0.0);
  EXPECT_NEAR(saturated_term(1e8, 1.0), 1e8, 1e-7);
  EXPECT_NEAR(saturated_term(-1e8, 1.0), 1e8, 1e-7);
}

TEST(SaturatedTerm, GapBound) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> lg(-6, 6), sgn(-1, 1);
  for (int k = 0; k < 1000000; ++k) {
    const double s = std::copysign(std::pow(10.0, lg(rng)), sgn(rng));
    const double g = std::pow(10.0, lg(rng));
    const double gap = std::abs(s) - saturated_term(s, g);
    const double slack = 1e-12 * std::max(std::abs(s), g);
    ASSERT_GE(gap, -slack) << s << " " << g;
    ASSERT_LE(gap, g + slack) << s << " " << g;
  }
}

TEST(Chi, Examples) {
  const LipschitzRate one = [](auto, auto, double) { return 1.0; };
  const std::vector<double> y{1.0, -2.0};
  EXPECT_EQ(chi(one, y, y, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(chi(one, std::vector{4.0, 2.0}, y, 0.0), 5.0);
  const auto sl = make_single_link();
  const std::vector<double> x{0.3, -1.1}, yb{2.0, 2.0};
  EXPECT_NEAR(chi(sl.metadata().lipschitz[1], x, yb, 0.2),
              11.81 * std::hypot(0.3 - 2.0, -1.1 - 2.0), 1e-12);
  EXPECT_THROW(chi(one, std::vector{1.0}, y, 0.0), std::invalid_argument);
}

TEST(CouplingTerm, ZeroSignalAndFormula) {
  EXPECT_EQ(coupling_term(3.0, 0.0, 10.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(coupling_term(-3.0, 2.0, 10.0, 4.0), 15.0);
  EXPECT_DOUBLE_EQ(coupling_term(-3.0, 2.0, 10.0, -4.0), -15.0);
}

TEST(BetaFirst, ZeroCases) {
  TransformAux aux;
  aux.z1 = 0;
  aux.varphi = 1;
  aux.psi = 1;
  aux.error_gain = 1;
  aux.eta_ratio = 0;
  for (auto mode : {ControlMode::Adaptive, ControlMode::ApproximatorFree}) {
    EXPECT_EQ(beta_first(mode, aux, 0.0, 0.3, 0.0, -0.2), 0.0);
  }
}

TEST(BetaFirst, EtaTermVanishesAfterSettling) {
  ErrorTransform x(perf_from_terminal(0.1, 0.05, 1.0, 0.5));
  const auto aux = x.auxiliaries(0.01, 0.7);
  EXPECT_DOUBLE_EQ(beta_first(ControlMode::Adaptive, aux, 0.4, 0.2, 1.5, x.perf().eta_dot(0.7)),
                   0.4 - 1.5);
}

TEST(VirtualControlFirst, ZeroError) {
  TransformAux aux;
  StageGains g;
  EXPECT_EQ(virtual_control_first(g, 0.5, aux, 3.0, 2.0), 0.0);
}

TEST(VirtualControl, ZeroResidueAndLargeGuards) {
  StageGains g;
  g.varrho = 3;
  EXPECT_DOUBLE_EQ(virtual_control(g, 0.25, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0), -4.0);
  g.delta = g.sigma = g.rho = g.tau = 1e300;
  const double z = 0.4, zt = zeta(z, g.varrho);
  EXPECT_NEAR(virtual_control(g, 0.5, zt, z, 5.0, 6.0, 7.0, 8.0),
              -g.varpi * (std::atan(z) + g.varrho * z) / (0.5 * zt) - zt / 0.5, 1e-12);
}

TEST(VirtualControl, XiDenominatorSwitch) {
  StageGains g;
  g.delta = g.sigma = g.rho = 1e300;
  g.tau = 0.5;
  const double zt = 2.0, gl = 0.5, gam = 3.0, xi = 1.5;
  const double base = virtual_control(g, gl, zt, 0.0, 0, 0, 0, 0);
  const double with_gamma = virtual_control(g, gl, zt, 0.0, 0, 0, gam, xi, XiDenominator::Gamma);
  const double with_xi = virtual_control(g, gl, zt, 0.0, 0, 0, gam, xi, XiDenominator::Xi);
  EXPECT_NEAR(with_gamma - base, -zt * xi * xi / (gl * std::sqrt(zt * zt * gam * gam + 0.25)),
              1e-12);
  EXPECT_NEAR(with_xi - base, -zt * xi * xi / (gl * std::sqrt(zt * zt * xi * xi + 0.25)), 1e-12);
}

TEST(AdaptiveLaw, Examples) {
  StageGains g;
  g.varpi = 2;
  g.mu = 10;
  const std::vector<double> th{1.0, -3.0}, phi{0.25, 0.75};
  std::vector<double> out(2);
  adaptive_law_derivative(g, th, phi, 0.0, out);
  EXPECT_EQ(out, (std::vector{-2.0, 6.0}));
  adaptive_law_derivative(g, std::vector{0.0, 0.0}, phi, 1.0, out);
  EXPECT_EQ(out, (std::vector{2.5, 7.5}));
  EXPECT_THROW(adaptive_law_derivative(g, th, std::vector{1.0}, 1.0, out), std::invalid_argument);
}

TEST(AdaptiveLaw, Affine) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-5, 5);
  StageGains g;
  g.varpi = 7;
  g.mu = 3;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> t1(11), t2(11), mix(11), phi(11), f1(11), f2(11), fm(11);
    const double lam = u(rng) / 5, drive = u(rng);
    for (int j = 0; j < 11; ++j) {
      t1[j] = u(rng);
      t2[j] = u(rng);
      phi[j] = std::abs(u(rng));
      mix[j] = lam * t1[j] + (1 - lam) * t2[j];
    }
    adaptive_law_derivative(g, t1, phi, drive, f1);
    adaptive_law_derivative(g, t2, phi, drive, f2);
    adaptive_law_derivative(g, mix, phi, drive, fm);
    for (int j = 0; j < 11; ++j) EXPECT_NEAR(fm[j], lam * f1[j] + (1 - lam) * f2[j], 1e-12);
  }
}

TEST(Filter, DerivativeExamples) {
  EXPECT_EQ(filter_derivative(0.3, 2.0, 2.0), 0.0);
  EXPECT_NEAR(filter_derivative(1e-5, 0.0, 1.0), 1e5, 1e-6);
}

TEST(Filter, ConvergesExponentiallyToConstantInput) {
  const double lambda = 0.05, alpha = 2.0, s0 = -1.0, dt = 1e-3;
  auto f = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy[0] = filter_derivative(lambda, y[0], alpha);
  };
  std::vector<double> y{s0};
  double t = 0;
  for (int k = 0; k < 500; ++k) {
    y = rk4_step(f, t, y, dt);
    t += dt;
    EXPECT_NEAR(y[0], alpha + (s0 - alpha) * std::exp(-t / lambda), 1e-6);
  }
}

TEST(StageGains, Validation) {
  StageGains g;
  EXPECT_NO_THROW(g.validate(1));
  g.varrho = 1.0;
  EXPECT_THROW(g.validate(1), std::invalid_argument);
  EXPECT_NO_THROW(g.validate(0));
  g = StageGains{};
  g.lambda = 0;
  EXPECT_THROW(g.validate(2), std::invalid_argument);
  g = StageGains{};
  g.delta = -1;
  EXPECT_THROW(g.validate(0), std::invalid_argument);
}

TEST(ControlChain, RejectsBadConfiguration) {
  ControllerConfig cfg;
  cfg.gains = moderate_gains(2);
  const auto meta = make_integrator_chain(3).metadata();
  const ReferenceSignal ref{[](double) { return 0.0; }, [](double) { return 0.0; }};
  const ErrorTransform x(perf_from_terminal(0.1, 0.05, 1.0, 0.5));
  EXPECT_THROW(ControlChain(meta, ref, x, cfg), std::invalid_argument);
  EXPECT_THROW(ControlChain(make_integrator_chain(1).metadata(), ref, x, cfg),
               std::invalid_argument);
  cfg.gains = moderate_gains(3);
  cfg.sign_smoothing = -1;
  EXPECT_THROW(ControlChain(meta, ref, x, cfg), std::invalid_argument);
}

TEST(ControlChain, ZeroErrorFixedPoint) {
  const double gl = 0.5;
  const ReferenceSignal ref{[](double) { return 0.0; }, [](double) { return 0.0; }};
  const ErrorTransform x(perf_from_terminal(0.1, 0.05, 1.0, 0.5));
  {
    ControllerConfig cfg;
    cfg.gains = moderate_gains(2);
    ControlChain chain(make_integrator_chain(2, gl, 2.0).metadata(), ref, x, cfg);
    const std::vector<double> x0{0.0, 0.0};
    const auto st = chain.initial_state(x0);
    const auto sig = chain.evaluate(x0, st, 1.0);
    EXPECT_EQ(sig.z, (std::vector{0.0, 0.0}));
    EXPECT_EQ(sig.r, (std::vector{0.0, 0.0}));
    EXPECT_EQ(sig.alpha[0], 0.0);
    EXPECT_EQ(sig.zeta[1], 1.0);
    EXPECT_EQ(sig.u, -1.0 / gl);
  }
  {
    // with three stages alpha2 = -1/gl, so z3 = r3 = 0 forces x3 = -1/gl and
    // chi3 = |x3| enters u through its saturated term
    ControllerConfig cfg;
    cfg.gains = moderate_gains(3);
    ControlChain chain(make_integrator_chain(3, gl, 2.0).metadata(), ref, x, cfg);
    ControllerState st;
    for (int k = 0; k < 3; ++k) st.theta_hat.push_back(AdaptiveWeights::zeros(11));
    st.filters = {0.0, -1.0 / gl};
    const std::vector<double> x0{0.0, 0.0, -1.0 / gl};
    const auto sig = chain.evaluate(x0, st, 1.0);
    EXPECT_EQ(sig.z, (std::vector{0.0, 0.0, 0.0}));
    EXPECT_EQ(sig.r, (std::vector{0.0, 0.0, 0.0}));
    EXPECT_EQ(sig.alpha[0], 0.0);
    EXPECT_EQ(sig.alpha[1], -1.0 / gl);
    const double chi3 = 1.0 / gl, sigma3 = cfg.gains[2].sigma;
    EXPECT_DOUBLE_EQ(sig.chi[2], chi3);
    EXPECT_NEAR(sig.u, -chi3 * chi3 / (gl * std::sqrt(chi3 * chi3 + sigma3 * sigma3)) - 1.0 / gl,
                1e-14);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(sig.beta[k], 0.0);
      EXPECT_EQ(sig.gamma[k], 0.0);
      EXPECT_EQ(sig.xi[k], 0.0);
    }
  }
}

TEST(ControlChain, MatchesOracleAtElectromechanicalStart) {
  for (auto mode : {ControlMode::Adaptive, ControlMode::ApproximatorFree}) {
    const auto chain = em_chain(mode);
    const std::vector<double> x0{5, 3, 2};
    const auto st = chain.initial_state(x0);
    const auto sig = chain.evaluate(x0, st, 0.0);
    const auto o = em_oracle(mode == ControlMode::Adaptive)
                       .run(x0, st.filters,
                            std::vector<std::vector<double>>(3, std::vector<double>(11, 0.0)), 0.0,
                            2.0, 10.0);
    EXPECT_TRUE(std::isfinite(sig.u));
    expect_rel(sig.transform.z1, 3.0, 1e-12, "z1");
    for (int k = 0; k < 2; ++k) expect_rel(sig.alpha[k], o.alpha[k], 1e-10, "alpha");
    expect_rel(sig.u, o.u, 1e-10, "u");
    // filters start on the virtual controls
    EXPECT_EQ(st.filters[0], sig.alpha[0]);
    EXPECT_EQ(st.filters[1], sig.alpha[1]);
  }
}

TEST(ControlChain, MatchesOracleAtRandomStates) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-3, 3), ut(0.0, 1.0);
  for (auto mode : {ControlMode::Adaptive, ControlMode::ApproximatorFree}) {
    for (auto denom : {XiDenominator::Gamma, XiDenominator::Xi}) {
      const auto chain = em_chain(mode, denom);
      auto oracle = em_oracle(mode == ControlMode::Adaptive);
      oracle.xi_root_gamma = denom == XiDenominator::Gamma;
      // smaller guards so every saturated term contributes
      ControllerConfig cfg = chain.config();
      cfg.gains = moderate_gains(3);
      oracle.g = cfg.gains;
      const ControlChain c2(chain.plant(), chain.reference(), chain.transform(), cfg);
      int checked = 0;
      for (int k = 0; k < 500; ++k) {
        const double t = ut(rng);
        const double yr = chain.reference().value(t);
        std::vector<double> x{yr + 0.9 * std::tan(chain.transform().perf().eta(t)) * u(rng) / 3,
                              u(rng), u(rng)};
        ControllerState st;
        st.filters = {u(rng), u(rng)};
        std::vector<std::vector<double>> th(3, std::vector<double>(11));
        for (auto& row : th)
          for (auto& v : row) v = u(rng);
        if (mode == ControlMode::Adaptive) {
          for (const auto& row : th) st.theta_hat.push_back({row});
        }
        const auto sig = c2.evaluate(x, st, t);
        const auto o = oracle.run(x, st.filters, th, t, yr, chain.reference().derivative(t));
        for (int i = 0; i < 3; ++i) expect_rel(sig.z[i], o.z[i], 1e-10, "z");
        for (int i = 0; i < 3; ++i) expect_rel(sig.beta[i], o.beta[i], 1e-9, "beta");
        for (int i = 0; i < 2; ++i) expect_rel(sig.alpha[i], o.alpha[i], 1e-9, "alpha");
        expect_rel(sig.u, o.u, 1e-9, "u");
        ++checked;
      }
      EXPECT_EQ(checked, 500);
    }
  }
}

TEST(ControlChain, SingleLinkStartIsFinite) {
  ControllerConfig cfg;
  cfg.mode = ControlMode::ApproximatorFree;
  cfg.gains.assign(2, StageGains{1e6, 1e6, 1e6, 1e6, 10, 1, 10, 1e-3});
  ControlChain chain(make_single_link().metadata(), single_link_reference(),
                     ErrorTransform(perf_from_terminal(0.9, 0.05, 1.0, 0.5)), cfg);
  const std::vector<double> x0{0, 0};
  const auto st = chain.initial_state(x0);
  const auto sig = chain.evaluate(x0, st, 0.0);
  EXPECT_TRUE(std::isfinite(sig.u));
  EXPECT_NEAR(sig.transform.z1, -kPiD, 1e-9);
  Oracle o{{0.5, 0.5}, {10, 10}, {1.0, 11.81}, cfg.gains,
           perf_from_terminal(0.9, 0.05, 1.0, 0.5).a(), 0.9, 0.05, 1.0, 0.5, false};
  const auto ref = o.run(x0, st.filters, {}, 0.0, kPiD, 20.0);
  expect_rel(sig.alpha[0], ref.alpha[0], 1e-10, "alpha1");
  expect_rel(sig.u, ref.u, 1e-10, "u");
}

TEST(ControlChain, ModesCoincideWhenEstimateMatchesEnergyTerm) {
  const auto free_chain = em_chain(ControlMode::ApproximatorFree);
  const auto adaptive_chain = em_chain(ControlMode::Adaptive);
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 100; ++k) {
    const double t = 0.05 * k / 10.0;
    const double room = std::min(5.0, std::tan(free_chain.transform().perf().eta(t)));
    const std::vector<double> x{free_chain.reference().value(t) + 0.4 * room * u(rng), u(rng),
                                u(rng)};
    ControllerState free_state;
    free_state.filters = {u(rng), u(rng)};
    const auto fs = free_chain.evaluate(x, free_state, t);
    ControllerState ad_state = free_state;
    for (int i = 0; i < 3; ++i) {
      AdaptiveWeights w;
      for (double p : fs.basis[i]) w.theta_hat.push_back(fs.drive[i] * p);
      ad_state.theta_hat.push_back(w);
    }
    const auto as = adaptive_chain.evaluate(x, ad_state, t);
    for (int i = 0; i < 3; ++i) expect_rel(as.beta[i], fs.beta[i], 1e-12, "beta");
    expect_rel(as.u, fs.u, 1e-12, "u");
  }
}

TEST(ControlChain, AdaptiveDerivativesFollowDrive) {
  const auto chain = em_chain(ControlMode::Adaptive);
  const std::vector<double> x0{5, 3, 2};
  const auto st = chain.initial_state(x0);
  const auto sig = chain.evaluate(x0, st, 0.0);
  const auto d = chain.adaptive_derivatives(sig, st);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_NEAR(sig.drive[0], sig.transform.z1 * sig.transform.varphi * sig.transform.psi, 1e-12);
  for (int j = 0; j < 11; ++j) EXPECT_DOUBLE_EQ(d[0][j], 10 * sig.drive[0] * sig.basis[0][j]);
  EXPECT_THROW(em_chain(ControlMode::ApproximatorFree).adaptive_derivatives(sig, st),
               std::logic_error);
}

TEST(ControlChain, BreachPropagates) {
  const auto chain = em_chain(ControlMode::Adaptive);
  ControllerState st;
  st.filters = {0, 0};
  for (int k = 0; k < 3; ++k) st.theta_hat.push_back(AdaptiveWeights::zeros(11));
  const double yr = chain.reference().value(1.0);
  EXPECT_THROW(chain.evaluate(std::vector{yr + 1.0, 0.0, 0.0}, st, 1.0), FunnelBreach);
}

TEST(PartialEnergy, Formula) {
  StageSignals sig;
  sig.z = {2.0, -1.0, 0.5};
  const auto g = moderate_gains(3);
  EXPECT_NEAR(partial_energy(sig, g),
              2.0 + std::atan(-1.0) + g[1].varrho * 1.0 + std::atan(0.5) + g[2].varrho * 0.5,
              1e-15);
}

TEST(ControlMode, Strings) {
  EXPECT_EQ(control_mode_from_string("adaptive"), ControlMode::Adaptive);
  EXPECT_EQ(control_mode_from_string(to_string(ControlMode::ApproximatorFree)),
            ControlMode::ApproximatorFree);
  EXPECT_THROW(control_mode_from_string("fixed-gain"), std::invalid_argument);
}
