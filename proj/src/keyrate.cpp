#include "nqkd/keyrate.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nqkd/error.hpp"

namespace nqkd {
namespace {

constexpr double kLogTolerance = 1e-9;
constexpr double kQberBracketLow = 1e-9;
constexpr double kQberBracketHigh = 0.45;
constexpr double kGateBracketLow = 1e-9;
constexpr double kGateBracketHigh = 0.5;
constexpr double kScanStep = 0.005;

double xlog2x(double x) { return x <= 0.0 ? 0.0 : x * std::log2(x); }

double clamp_log_argument(double x, const char* what) {
  if (x < -kLogTolerance || x > 1.0 + kLogTolerance) {
    throw NumericError(std::string("inconsistent estimates: ") + what + " outside [0, 1]");
  }
  return std::clamp(x, 0.0, 1.0);
}

// log2(2^m - 1) - m, accurate for large m.
double log2_one_minus_pow2(int m) { return std::log1p(-std::ldexp(1.0, -m)) / std::numbers::ln2; }

// Root of f in [lo, hi] with f(lo) > 0 > f(hi); bisection to width tol.
double bisect_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const auto [a, b] = boost::math::tools::bisect(
      f, lo, hi, [tol](double x, double y) { return std::abs(y - x) <= tol; });
  return 0.5 * (a + b);
}

// First sign change of f on a grid over [lo, hi], refined by bisection.
double first_crossing(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double prev_x = lo;
  double prev_f = f(lo);
  if (!(prev_f > 0.0)) throw NumericError("no advantage at the lower end of the bracket");
  for (double x = lo + kScanStep; x <= hi + 1e-15; x += kScanStep) {
    const double xi = std::min(x, hi);
    const double fx = f(xi);
    if (fx <= 0.0) return bisect_root(f, prev_x, xi, tol);
    prev_x = xi;
    prev_f = fx;
  }
  throw NumericError("no crossover in the bracket");
}

}  // namespace

PartyCount PartyCount::finite(int n) {
  if (n < 2) throw InvalidArgument("number of parties must be at least 2");
  return PartyCount(n, false);
}

PartyCount PartyCount::parse(const std::string& text) {
  if (text == "inf" || text == "infinity") return infinite();
  try {
    std::size_t pos = 0;
    const int n = std::stoi(text, &pos);
    if (pos != text.size()) throw InvalidArgument("bad party count '" + text + "'");
    return finite(n);
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad party count '" + text + "'");
  }
}

int PartyCount::value() const {
  if (infinite_) throw InvalidArgument("infinite party count has no integer value");
  return n_;
}

std::string PartyCount::to_string() const { return infinite_ ? "inf" : std::to_string(n_); }

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("binary entropy argument outside [0, 1]");
  return -xlog2x(p) - xlog2x(1.0 - p);
}

nlohmann::json RateReport::to_json() const {
  return {{"r_inf", r_inf},
          {"r_clamped", r_clamped},
          {"rate", rate},
          {"t_rep", t_rep},
          {"limiting_bob", limiting_bob},
          {"components",
           {{"alice_x_term", components[0]},
            {"parity_term", components[1]},
            {"qber_z_term", components[2]},
            {"error_correction_term", components[3]}}}};
}

RateReport secret_fraction(const RateInput& in) {
  if (in.n_parties < 2) throw InvalidArgument("need at least two parties");
  if (!(in.t_rep > 0.0)) throw InvalidArgument("t_rep must be positive");
  if (static_cast<int>(in.q_ab.size()) != in.n_parties - 1) {
    throw InvalidArgument("need one Q_AB per Bob");
  }
  require_probability(in.q_z, "Q_Z");
  require_probability(in.q_x, "Q_X");
  for (double q : in.q_ab) require_probability(q, "Q_AB");

  const double a = clamp_log_argument(1.0 - 0.5 * in.q_z - in.q_x, "1 - Q_Z/2 - Q_X");
  const double b = clamp_log_argument(in.q_x - 0.5 * in.q_z, "Q_X - Q_Z/2");
  const double agree = 1.0 - in.q_z;
  const auto worst = std::max_element(in.q_ab.begin(), in.q_ab.end());

  RateReport report;
  report.components = {xlog2x(a), xlog2x(b), agree <= 0.0 ? 0.0 : agree * (1.0 - std::log2(agree)),
                       -binary_entropy(*worst)};
  report.r_inf = report.components[0] + report.components[1] + report.components[2] + report.components[3];
  report.r_clamped = std::max(0.0, report.r_inf);
  report.t_rep = in.t_rep;
  report.rate = report.r_inf / in.t_rep;
  report.limiting_bob = static_cast<int>(worst - in.q_ab.begin()) + 1;
  return report;
}

double rate_depolarized(double q, PartyCount n) {
  if (n.is_infinite()) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("QBER outside [0, 1]");
    return 1.0 - binary_entropy(0.5 * q) - q;
  }
  const int parties = n.value();
  if (!(q >= 0.0 && q <= max_depolarized_qber(parties) + 1e-15)) {
    throw InvalidArgument("QBER outside the admissible range of a depolarized state");
  }
  // eps = 1/(2^N - 2); the two ratios are 1 + eps and 1/2 + eps.
  const double eps = std::ldexp(1.0, -parties) / (1.0 - std::ldexp(1.0, 1 - parties));
  const double ratio_all = 1.0 + eps;
  const double ratio_pair = 0.5 + eps;
  // log2(2^(N-1) - 1) - (1 + eps) log2(2^N - 1), expanded to avoid 2^N.
  const double linear = -1.0 - eps * parties + log2_one_minus_pow2(parties - 1) -
                        ratio_all * log2_one_minus_pow2(parties);
  return 1.0 + binary_entropy(q) - binary_entropy(std::min(1.0, q * ratio_all)) -
         binary_entropy(q * ratio_pair) + linear * q;
}

double rate_six_state(double q) {
  if (!(q >= 0.0 && q <= 2.0 / 3.0)) throw InvalidArgument("six-state QBER outside [0, 2/3]");
  return 1.0 - binary_entropy(1.5 * q) - 1.5 * std::log2(3.0) * q;
}

RateInput depolarized_rate_input(int n_parties, double qber, double t_rep) {
  const auto state = depolarized_state(n_parties, qber);
  RateInput in;
  in.n_parties = n_parties;
  in.q_z = qber_z(state);
  in.q_x = qber_x(state);
  in.q_ab.resize(n_parties - 1);
  for (int i = 1; i < n_parties; ++i) in.q_ab[i - 1] = qber_pairwise(state, i);
  in.t_rep = t_rep;
  return in;
}

double threshold_qber(PartyCount n) {
  auto f = [n](double q) { return rate_depolarized(q, n); };
  if (!(f(kQberBracketLow) > 0.0 && f(kQberBracketHigh) < 0.0)) {
    throw NumericError("no sign change of the rate in the QBER bracket");
  }
  return bisect_root(f, kQberBracketLow, kQberBracketHigh, 1e-13);
}

RateReport twoqkd_conference_rate(const std::vector<double>& link_qbers, double t_rep) {
  if (link_qbers.empty()) throw InvalidArgument("2QKD needs at least one link");
  if (!(t_rep > 0.0)) throw InvalidArgument("t_rep must be positive");
  // the one-time-pad relay is bound by the slowest link
  std::size_t worst = 0;
  double worst_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < link_qbers.size(); ++i) {
    const double r = rate_six_state(link_qbers[i]);
    if (r < worst_rate) {
      worst_rate = r;
      worst = i;
    }
  }
  auto report = secret_fraction(depolarized_rate_input(2, link_qbers[worst], t_rep));
  report.limiting_bob = static_cast<int>(worst) + 1;
  return report;
}

RateReport nqkd_gate_rate(int n_parties, double f_gate, Topology topology, double t_rep) {
  const auto l = lambda0(n_parties, GateNoise{f_gate, topology});
  RateInput in;
  in.n_parties = n_parties;
  in.q_z = std::clamp(qber_from_lambda0(l), 0.0, 1.0);
  in.q_x = std::clamp(qber_x_from_lambda0(l), 0.0, 1.0);
  in.q_ab.assign(n_parties - 1, qab_average(n_parties, f_gate));
  in.t_rep = t_rep;
  return secret_fraction(in);
}

RateReport twoqkd_gate_rate(int n_parties, double f_gate, double t_rep) {
  require_probability(f_gate, "f_G");
  return twoqkd_conference_rate(std::vector<double>(n_parties - 1, 0.5 * f_gate), t_rep);
}

RateReport nqkd_channel_rate(int n_parties, double f_channel, double t_rep) {
  return secret_fraction(depolarized_rate_input(n_parties, channel_qber(n_parties, f_channel), t_rep));
}

RateReport twoqkd_channel_rate(int n_parties, double f_channel, double t_rep) {
  return twoqkd_conference_rate(std::vector<double>(n_parties - 1, channel_qber(2, f_channel)), t_rep);
}

double nqkd_gate_threshold(int n_parties) {
  if (n_parties < 3) throw InvalidArgument("gate threshold defined for N >= 3");
  const double t2 = n_parties - 1.0;
  auto advantage = [&](double f) {
    return nqkd_gate_rate(n_parties, f, Topology::router, 1.0).rate - twoqkd_gate_rate(n_parties, f, t2).rate;
  };
  return first_crossing(advantage, kGateBracketLow, kGateBracketHigh, 1e-12);
}

double nqkd_channel_threshold(int n_parties) {
  if (n_parties < 3) throw InvalidArgument("channel threshold defined for N >= 3");
  const double t2 = n_parties - 1.0;
  auto advantage = [&](double f) {
    return nqkd_channel_rate(n_parties, f, 1.0).rate - twoqkd_channel_rate(n_parties, f, t2).rate;
  };
  return first_crossing(advantage, kGateBracketLow, kGateBracketHigh, 1e-12);
}

}  // namespace nqkd
