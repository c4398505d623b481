#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "acz/comb.hpp"
#include "acz/lowpass.hpp"
#include "acz/signal_model.hpp"

using namespace acz;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> step_grid(double step, double tau_max) {
  std::vector<double> v;
  for (int i = 1; i * step <= tau_max; ++i) v.push_back(i * step);
  return v;
}

double rms(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double median_distance(const std::vector<double>& found, const std::vector<double>& predicted) {
  std::vector<double> d;
  for (double f : found) {
    double best = INFINITY;
    for (double p : predicted) best = std::min(best, std::abs(f - p));
    d.push_back(best);
  }
  std::sort(d.begin(), d.end());
  return d.empty() ? INFINITY : d[d.size() / 2];
}

// Residual of a dense XY8-like simulation (arbitrary pi-pulse phases) against
// the exact closed form without decay.
std::vector<double> comb_residual(const std::vector<double>& tau, const std::vector<double>& phases, int n,
                                  const SignalModelParams& p) {
  SimulationOptions o;
  o.apply_decay = false;
  auto make = [&](double t) { return detail::build_decoupling(Protocol::custom, phases, t, ControlSettings{}, n); };
  const auto sim = simulate_trace(make, tau, {p.detuning, p.rabi, 0.0}, p, o, 1);
  SignalModelParams flat = p;
  flat.t2 = 1e12;
  std::vector<double> r(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) r[i] = sim.contrast[i] - closed_form_signal(tau[i], flat, ShiftMode::exact);
  return r;
}

}  // namespace

TEST(ClosedForm, StartsAtUnity) {
  EXPECT_DOUBLE_EQ(closed_form_signal(0.0, SignalModelParams{}), 1.0);
}

TEST(ClosedForm, DecaysToHalfContrast) {
  SignalModelParams p;
  EXPECT_NEAR(closed_form_signal(200.0, p), 1.0 - p.contrast / 2.0, 1e-12);
}

TEST(ClosedForm, FirstMinimumAtHalfPeriod) {
  SignalModelParams p;
  const double f = ac_zeeman_shift(p.detuning, p.rabi, ShiftMode::approx).value;
  const double tau = 1.0 / (2.0 * f);
  const double expected = 1.0 - 0.5 * p.contrast * (1.0 + std::exp(-2.0 * tau / p.t2));
  EXPECT_NEAR(closed_form_signal(tau, p), expected, 1e-12);
  EXPECT_NEAR(closed_form_signal(tau, p), 0.96917, 5e-5);
}

TEST(ClosedForm, StaysWithinContrastBounds) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(5.0, 500.0), r(0.0, 20.0), t2(0.5, 50.0), c(0.01, 1.0), tau(0.0, 40.0);
  for (int i = 0; i < 2000; ++i) {
    SignalModelParams p{r(rng), d(rng), t2(rng), c(rng)};
    const double s = closed_form_signal(tau(rng), p, ShiftMode::exact);
    EXPECT_GE(s, 1.0 - p.contrast - 1e-12);
    EXPECT_LE(s, 1.0 + 1e-12);
  }
}

TEST(ClosedForm, RejectsBadParameters) {
  EXPECT_THROW(closed_form_signal(1.0, SignalModelParams{7.76, 140.0, 0.0, 0.05}), DomainError);
  EXPECT_THROW(closed_form_signal(1.0, SignalModelParams{7.76, 140.0, 3.2, 1.5}), DomainError);
  EXPECT_THROW(closed_form_trace({1.0, 0.5}, SignalModelParams{}), DomainError);
}

TEST(Simulation, NoSignalGivesUnitContrast) {
  SignalModelParams p;
  SimulationOptions o;
  o.apply_decay = false;
  for (double tau : {0.1, 0.7, 2.0, 5.0}) {
    EXPECT_NEAR(simulate_signal(build_cp2(tau), {p.detuning, 0.0, 0.0}, p, o), 1.0, 1e-12);
    EXPECT_NEAR(simulate_signal(build_xy8n(2, tau), {p.detuning, 0.0, 0.0}, p, o), 1.0, 1e-12);
    // with decay the coherent part relaxes towards 1 - C/2
    EXPECT_NEAR(simulate_signal(build_cp2(tau), {p.detuning, 0.0, 0.0}, p),
                1.0 - 0.5 * p.contrast * (1.0 - decay_envelope(tau, p.t2)), 1e-12);
  }
}

TEST(Simulation, Cp2MatchesExactClosedForm) {
  SignalModelParams p;
  const auto tau = linspace(0.05, 4.0, 80);
  const auto sim = simulate_trace([](double t) { return build_cp2(t); }, tau, {p.detuning, p.rabi, 0.0}, p);
  const auto cf = closed_form_trace(tau, p, ShiftMode::exact);
  EXPECT_LT(rms(sim.contrast, cf.contrast), 2e-3);
}

TEST(Simulation, PhaseGridIsConverged) {
  SignalModelParams p;
  SimulationOptions coarse, fine;
  fine.phase_step = coarse.phase_step / 2.0;
  for (double tau : {0.3, 1.1, 2.5}) {
    const auto seq = build_cp2(tau);
    EXPECT_LT(std::abs(simulate_signal(seq, {p.detuning, p.rabi, 0.0}, p, coarse) -
                       simulate_signal(seq, {p.detuning, p.rabi, 0.0}, p, fine)),
              1e-4);
  }
}

TEST(Simulation, EchoCancelsStaticDetuning) {
  SignalModelParams p;
  for (double delta : {0.3, -1.7, 4.0}) {
    SimulationOptions o;
    o.static_detuning = delta;
    for (double tau : {0.5, 1.3, 3.0}) {
      const auto seq = build_cp2(tau);
      EXPECT_NEAR(simulate_signal(seq, {p.detuning, p.rabi, 0.0}, p, o),
                  simulate_signal(seq, {p.detuning, p.rabi, 0.0}, p), 1e-9);
    }
  }
}

TEST(Simulation, PulseScaledT2Applies) {
  SignalModelParams p;
  SimulationOptions o;
  o.t2_scaling = T2Scaling{};
  const auto seq = build_xy8n(8, 2.0);
  SignalModelParams q = p;
  q.t2 = T2Scaling{}.at(64);
  EXPECT_NEAR(simulate_signal(seq, {p.detuning, p.rabi, 0.0}, p, o),
              simulate_signal(seq, {p.detuning, p.rabi, 0.0}, q), 1e-14);
}

TEST(TransitionProbability, NoEvolutionStaysPut) {
  for (double phi : {0.0, 1.0, 2.5}) EXPECT_NEAR(transition_probability(0.0, 7.76, 140.0, phi, 0.025, 0.0), 1.0, 1e-15);
}

TEST(TransitionProbability, MatchesRamseySimulation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-50.0, 50.0), r(0.0, 10.0), t(0.0, 2.0), ph(0.0, 2.0 * pi);
  const double rc = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double delta = d(rng), om = r(rng), tau = t(rng), phi = ph(rng);
    const double sim = 1.0 - simulate_population(build_ramsey(tau, rc), {delta, om, 0.0}, phi);
    EXPECT_NEAR(transition_probability(tau, om, delta, phi, 1.0 / (4.0 * rc), delta), sim, 1e-10);
  }
}

TEST(TransitionProbability, FarDetunedAverageIsSmall) {
  // Omega / Delta = 1/100: the phase-averaged flip is of order (Omega/W)^2.
  const double om = 1.0, delta = 100.0;
  double avg = 0.0;
  const int n = 628;
  for (int k = 0; k < n; ++k) avg += 1.0 - transition_probability(0.37, om, delta, 2.0 * pi * k / n, 0.025, delta);
  avg /= n;
  EXPECT_LT(avg, 1e-3);
}

TEST(LowPass, ConstantPassesUnchanged) {
  SignalTrace t;
  t.tau = linspace(0.0, 2.0, 401);
  t.contrast.assign(t.tau.size(), 0.975);
  const auto f = lowpass_filter(t, 1.0);
  for (double v : f.contrast) EXPECT_NEAR(v, 0.975, 1e-12);
  EXPECT_FALSE(f.meta.at("lowpass").empty());
}

TEST(LowPass, SlowAczSignalSurvives) {
  SignalModelParams p;
  SignalTrace t = closed_form_trace(linspace(0.0, 2.0, 2001), p);
  const auto f = lowpass_filter(t, 1.0);
  double amp = 0.0;
  for (double v : t.contrast) amp = std::max(amp, std::abs(v - 1.0));
  EXPECT_LT(rms(f.contrast, t.contrast), 0.01 * amp);
}

TEST(LowPass, RemovesFastComponent) {
  SignalTrace t;
  t.tau = linspace(0.0, 2.0, 2001);
  std::vector<double> slow;
  for (double x : t.tau) {
    slow.push_back(1.0 - 0.02 * std::cos(2.0 * pi * 0.215 * x));
    t.contrast.push_back(slow.back() + 0.01 * std::cos(2.0 * pi * 35.0 * x));
  }
  EXPECT_LT(rms(lowpass_filter(t, 1.0).contrast, slow), 5e-4);
}

TEST(LowPass, RejectsUnusableGrids) {
  SignalTrace t;
  t.tau = {0.0, 0.1, 0.3, 0.4};
  t.contrast.assign(4, 1.0);
  EXPECT_THROW(lowpass_filter(t, 1.0), DomainError);
  t.tau = linspace(0.0, 1.0, 11);
  t.contrast.assign(11, 1.0);
  EXPECT_THROW(lowpass_filter(t, 5.0), DomainError);
  EXPECT_THROW(lowpass_filter(t, 0.0), DomainError);
}

TEST(LowPass, ShrinksXy32CombResidual) {
  SignalModelParams p;
  p.t2 = 1e12;
  const double w = std::hypot(p.detuning, p.rabi);
  SignalTrace sim;
  sim.tau = step_grid(0.1 / w, 2.0);
  SimulationOptions o;
  o.apply_decay = false;
  sim = simulate_trace([](double t) { return build_xy8n(4, t); }, sim.tau, {p.detuning, p.rabi, 0.0}, p, o);
  const auto cf = closed_form_trace(sim.tau, p, ShiftMode::exact);
  const double before = rms(sim.contrast, cf.contrast);
  const double after = rms(lowpass_filter(sim, 1.0).contrast, cf.contrast);
  EXPECT_GT(before / after, 3.0);
}

TEST(Comb, PeriodFollowsGeneralizedRabi) {
  EXPECT_NEAR(comb_period(8, 140.0, 7.76), 32.0 / std::hypot(140.0, 7.76), 1e-15);
  EXPECT_THROW(comb_period(0, 140.0, 7.76), DomainError);
  const auto half = predicted_comb_dips(1, 140.0, 7.76, 0.0, 0.2, CombRule::half_integer);
  const auto xy8 = predicted_comb_dips(1, 140.0, 7.76, 0.0, 0.2, CombRule::xy8_pattern);
  EXPECT_EQ(xy8.size(), 2 * half.size());
  const double period = comb_period(1, 140.0, 7.76);
  for (std::size_t i = 0; i < half.size(); ++i) EXPECT_NEAR(half[i], (i + 0.5) * period, 1e-12);
}

TEST(Comb, DipsFollowPiPulsePhasePattern) {
  SignalModelParams p;
  const double w = std::hypot(p.detuning, p.rabi), step = 0.1 / w;
  const auto tau = step_grid(step, 0.8);
  const double period = comb_period(1, p.detuning, p.rabi);
  const auto half = predicted_comb_dips(1, p.detuning, p.rabi, 0.0, 0.8, CombRule::half_integer);
  const auto xy8 = predicted_comb_dips(1, p.detuning, p.rabi, 0.0, 0.8, CombRule::xy8_pattern);

  const std::vector<double> xy(xy8_phases.begin(), xy8_phases.end());
  const auto dips_xy = find_prominent_dips(tau, comb_residual(tau, xy, 1, p), period / 8.0, 0.5);
  ASSERT_GE(dips_xy.size(), 10u);
  EXPECT_LE(median_distance(dips_xy, xy8), 1.5 * step);
  EXPECT_GT(median_distance(dips_xy, half), 4.0 * step);

  const std::vector<double> all_x(8, 0.0);
  const auto dips_x = find_prominent_dips(tau, comb_residual(tau, all_x, 1, p), period / 8.0, 0.5);
  ASSERT_GE(dips_x.size(), 5u);
  EXPECT_LE(median_distance(dips_x, half), 1.5 * step);
  EXPECT_GT(median_distance(dips_x, xy8), 3.0 * step);
}

TEST(Comb, MatchCountsWithinTolerance) {
  const auto m = match_dips({1.0, 2.05, 3.5}, {1.01, 2.0, 3.0}, 0.02);
  EXPECT_EQ(m.found, 3u);
  EXPECT_EQ(m.matched, 1u);
  EXPECT_NEAR(m.worst_distance, 0.5, 1e-12);
}

TEST(Comb, DominantFrequencyOfCosine) {
  const auto tau = linspace(0.0, 10.0, 1001);
  std::vector<double> y;
  for (double x : tau) y.push_back(std::cos(2.0 * pi * 4.0 * x));
  EXPECT_NEAR(dominant_frequency(tau, y), 4.0, 0.1);
}

TEST(Comb, ProminentDipsIgnoreShallowWiggles) {
  const auto tau = linspace(0.0, 4.0, 4001);
  std::vector<double> y;
  for (double x : tau) y.push_back(-0.3 * x - std::exp(-std::pow((x - 1.0) / 0.02, 2)) - std::exp(-std::pow((x - 3.0) / 0.02, 2)) +
                                   0.002 * std::sin(2.0 * pi * 20.0 * x));
  const auto d = find_prominent_dips(tau, y, 0.25, 0.3);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0], 1.0, 0.01);
  EXPECT_NEAR(d[1], 3.0, 0.01);
}
