#include "nqkd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "nqkd/error.hpp"
#include "nqkd/network.hpp"
#include "nqkd/protocol.hpp"

namespace nqkd::cli {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw InvalidArgument("");
    return v;
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad " + what + " '" + text + "'");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

NoiseConfig parse_noise(const std::string& text, const std::string& topology) {
  NoiseConfig cfg;
  if (text.empty() || text == "none") return cfg;
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw InvalidArgument("--noise expects gate:<f> or channel:<f>");
  const double v = parse_double(parts[1], "noise value");
  if (parts[0] == "gate") {
    return NoiseConfig::from_json({{"model", "gate"}, {"fG", v}, {"topology", topology == "router" ? "router" : "star"}});
  }
  if (parts[0] == "channel") return NoiseConfig::from_json({{"model", "channel"}, {"fC", v}});
  throw InvalidArgument("unknown noise model '" + parts[0] + "'");
}

NetworkModel network_for(const std::string& topology, int n) {
  if (topology == "star") return NetworkModel::star(n);
  if (topology == "router") return NetworkModel::router(n);
  if (topology == "butterfly") {
    if (n != 3) throw InvalidArgument("the butterfly network connects exactly 3 parties");
    return NetworkModel::butterfly();
  }
  throw InvalidArgument("unknown topology '" + topology + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << text;
}

// Rows of a sweep table; written as CSV or as a JSON array of objects.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string render(const std::string& format) const {
    if (format == "json") {
      auto arr = nlohmann::json::array();
      for (const auto& row : rows) {
        nlohmann::json obj;
        for (std::size_t i = 0; i < header.size(); ++i) {
          obj[header[i]] = std::isfinite(row[i]) ? nlohmann::json(row[i]) : nlohmann::json(nullptr);
        }
        arr.push_back(obj);
      }
      return arr.dump(2) + "\n";
    }
    std::string s = fmt::format("{}\n", fmt::join(header, ","));
    for (const auto& row : rows) {
      std::vector<std::string> cells;
      for (double v : row) cells.push_back(format_number(v));
      s += fmt::format("{}\n", fmt::join(cells, ","));
    }
    return s;
  }
};

double party_column(const PartyCount& n) {
  return n.is_infinite() ? std::numeric_limits<double>::infinity() : n.value();
}

struct RatePoint {
  double r_inf;
  double r_nqkd;
  double r_2qkd;
};

// One sweep point: the variable is Q (depolarized), fG or fC.
RatePoint rate_point(const std::string& var, double x, const PartyCount& n, const std::string& topology) {
  if (n.is_infinite()) {
    if (var != "Q") throw InvalidArgument("N = inf is only available for the Q sweep");
    const double r = rate_depolarized(x, n);
    return {r, r, kNaN};
  }
  const int parties = n.value();
  const auto net = network_for(topology, parties);
  const double t_n = schedule_for(net, Protocol::nqkd).t_rep();
  const double t_2 = schedule_for(net, Protocol::twoqkd).t_rep();
  RateReport nq;
  RateReport tq;
  if (var == "Q") {
    nq = secret_fraction(depolarized_rate_input(parties, x, t_n));
    tq = twoqkd_conference_rate(std::vector<double>(parties - 1, x), t_2);
  } else if (var == "fG") {
    nq = nqkd_gate_rate(parties, x, topology == "router" ? Topology::router : Topology::star, t_n);
    tq = twoqkd_gate_rate(parties, x, t_2);
  } else if (var == "fC") {
    nq = nqkd_channel_rate(parties, x, t_n);
    tq = twoqkd_channel_rate(parties, x, t_2);
  } else {
    throw InvalidArgument("unknown sweep variable '" + var + "'");
  }
  return {nq.r_inf, nq.rate, tq.rate};
}

int cmd_rates(const std::string& n_text, const std::string& sweep_text, const std::string& noise_text, double q,
              const std::string& topology, const std::string& format, const std::string& out_path,
              std::ostream& out) {
  const auto sweep = SweepSpec::parse(sweep_text);
  Table t;
  if (sweep.variable == "N") {
    // fixed parameter from --noise, or the depolarized --q
    std::string var = "Q";
    double x = q;
    if (!noise_text.empty() && noise_text != "none") {
      const auto noise = parse_noise(noise_text, topology);
      var = noise.model == NoiseConfig::Model::gate ? "fG" : "fC";
      x = noise.model == NoiseConfig::Model::gate ? noise.gate.f_gate : noise.channel.f_channel;
    }
    t.header = {"N", var, "r_inf", "R_nqkd", "R_2qkd"};
    for (double v : sweep.values()) {
      const auto n = PartyCount::finite(static_cast<int>(std::lround(v)));
      const auto p = rate_point(var, x, n, topology);
      t.rows.push_back({party_column(n), x, p.r_inf, p.r_nqkd, p.r_2qkd});
    }
  } else {
    t.header = {"N", sweep.variable, "r_inf", "R_nqkd", "R_2qkd"};
    for (const auto& n : parse_party_list(n_text)) {
      for (double x : sweep.values()) {
        const auto p = rate_point(sweep.variable, x, n, topology);
        t.rows.push_back({party_column(n), x, p.r_inf, p.r_nqkd, p.r_2qkd});
      }
    }
  }
  emit(t.render(format), out_path, out);
  return kOk;
}

int cmd_thresholds(const std::string& kind, const std::string& n_text, const std::string& format,
                   const std::string& out_path, std::ostream& out) {
  Table t;
  t.header = {"N", "threshold"};
  for (const auto& n : parse_party_list(n_text)) {
    double v = 0.0;
    if (kind == "qber") {
      v = threshold_qber(n);
    } else if (kind == "gate" || kind == "channel") {
      if (n.is_infinite()) throw InvalidArgument("N = inf is only available for qber thresholds");
      v = kind == "gate" ? nqkd_gate_threshold(n.value()) : nqkd_channel_threshold(n.value());
    } else {
      throw InvalidArgument("unknown threshold kind '" + kind + "'");
    }
    t.rows.push_back({party_column(n), v});
  }
  emit(t.render(format), out_path, out);
  return kOk;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& transcript_path,
                 const std::string& out_path, std::ostream& out) {
  auto json = read_json_file(config_path);
  if (seed) json["seed"] = *seed;
  if (transcript_path.empty()) json["transcript"] = false;
  const auto config = ProtocolConfig::from_json(json);
  const auto result = run_protocol(config);
  if (!transcript_path.empty()) {
    std::ofstream f(transcript_path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + transcript_path + "'");
    for (const auto& r : result.transcript) f << r.to_json().dump() << '\n';
  }
  auto summary = result.summary_json();
  summary["seed"] = config.seed;
  summary["n"] = config.n_parties;
  summary["rounds"] = config.rounds;
  emit(summary.dump(2) + "\n", out_path, out);
  return kOk;
}

int cmd_network(const std::string& graph_path, const std::string& topology, int n, const std::string& noise_text,
                const std::string& sweep_text, const std::string& format, const std::string& out_path,
                std::ostream& out) {
  const auto net = graph_path.empty() ? network_for(topology, n) : NetworkModel::from_json(read_json_file(graph_path));
  const std::string gate_topology = net.has_router() ? "router" : "star";
  if (sweep_text.empty()) {
    const auto c = compare_rates(net, parse_noise(noise_text, gate_topology));
    nlohmann::json j = c.to_json();
    j["network"] = net.to_json();
    j["n"] = net.n_parties();
    emit(j.dump(2) + "\n", out_path, out);
    return kOk;
  }
  const auto sweep = SweepSpec::parse(sweep_text);
  if (sweep.variable != "fG" && sweep.variable != "fC") throw InvalidArgument("network sweeps run over fG or fC");
  Table t;
  t.header = {sweep.variable, "R_nqkd", "R_2qkd", "advantage"};
  for (double x : sweep.values()) {
    const auto noise = parse_noise((sweep.variable == "fG" ? "gate:" : "channel:") + format_number(x), gate_topology);
    const auto c = compare_rates(net, noise);
    t.rows.push_back({x, c.nqkd.rate, c.twoqkd.rate, c.advantage ? 1.0 : 0.0});
  }
  emit(t.render(format), out_path, out);
  return kOk;
}

}  // namespace

SweepSpec SweepSpec::parse(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 4) throw InvalidArgument("--sweep expects var:start:stop:steps");
  SweepSpec s;
  s.variable = parts[0];
  if (s.variable != "Q" && s.variable != "fG" && s.variable != "fC" && s.variable != "N") {
    throw InvalidArgument("sweep variable must be Q, fG, fC or N");
  }
  s.start = parse_double(parts[1], "sweep start");
  s.stop = parse_double(parts[2], "sweep stop");
  const double steps = parse_double(parts[3], "sweep steps");
  if (steps != std::floor(steps) || steps < 2) throw InvalidArgument("sweep needs at least 2 integer steps");
  s.steps = static_cast<int>(steps);
  if (!(s.stop > s.start)) throw InvalidArgument("sweep range is empty");
  if (s.variable == "N" && (s.start < 2 || s.start != std::floor(s.start) || s.stop != std::floor(s.stop))) {
    throw InvalidArgument("N sweep needs integer bounds >= 2");
  }
  return s;
}

std::vector<double> SweepSpec::values() const {
  if (variable == "N") {
    std::vector<double> v;
    for (double n = start; n <= stop; n += 1.0) v.push_back(n);
    return v;
  }
  std::vector<double> v(steps);
  for (int i = 0; i < steps; ++i) v[i] = start + (stop - start) * i / (steps - 1);
  v.back() = stop;
  return v;
}

std::vector<PartyCount> parse_party_list(const std::string& text) {
  std::vector<PartyCount> out;
  for (const auto& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(PartyCount::parse(item));
      continue;
    }
    const int lo = PartyCount::parse(item.substr(0, dots)).value();
    const int hi = PartyCount::parse(item.substr(dots + 2)).value();
    if (hi < lo) throw InvalidArgument("empty party range '" + item + "'");
    for (int n = lo; n <= hi; ++n) out.push_back(PartyCount::finite(n));
  }
  if (out.empty()) throw InvalidArgument("no party counts given");
  return out;
}

std::string format_number(double v) { return fmt::format("{:.9g}", v); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conference key distribution with GHZ states: rates, thresholds, simulation and networks", "nqkd"};
  app.require_subcommand(1);
  std::string format = "csv";
  std::string out_path;
  std::string topology = "star";
  std::string noise;
  std::string sweep;
  std::string n_text = "2..8";
  std::optional<std::uint64_t> seed;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", out_path, "write output to this file");
  };

  auto* rates = app.add_subcommand("rates", "key rate curves");
  double q = 0.0;
  rates->add_option("--n", n_text, "party counts, e.g. 2..8 or 3,5,inf");
  rates->add_option("--sweep", sweep, "var:start:stop:steps with var Q, fG, fC or N")->required();
  rates->add_option("--noise", noise, "gate:<f> or channel:<f> (fixed parameter of an N sweep)");
  rates->add_option("--q", q, "depolarized QBER for an N sweep");
  rates->add_option("--topology", topology, "star, router or butterfly");
  common(rates);

  auto* thresholds = app.add_subcommand("thresholds", "threshold table");
  std::string kind = "qber";
  thresholds->add_option("--kind", kind, "qber, gate or channel");
  thresholds->add_option("--n", n_text, "party counts");
  common(thresholds);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo protocol run");
  std::string config_path;
  std::string transcript_path;
  simulate->add_option("--config", config_path, "protocol config JSON")->required();
  simulate->add_option("--seed", seed, "override the config seed");
  simulate->add_option("--transcript", transcript_path, "JSON-lines transcript output");
  simulate->add_option("--out", out_path, "summary output file");

  auto* network = app.add_subcommand("network", "NQKD vs 2QKD on a network");
  std::string graph_path;
  int n_parties = 3;
  network->add_option("--graph", graph_path, "network graph JSON");
  network->add_option("--topology", topology, "star, router or butterfly");
  network->add_option("--n", n_parties, "number of parties for a built-in topology");
  network->add_option("--noise", noise, "none, gate:<f> or channel:<f>");
  network->add_option("--sweep", sweep, "fG:start:stop:steps or fC:...");
  common(network);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*rates) return cmd_rates(n_text, sweep, noise, q, topology, format, out_path, out);
    if (*thresholds) return cmd_thresholds(kind, n_text, format, out_path, out);
    if (*simulate) return cmd_simulate(config_path, seed, transcript_path, out_path, out);
    return cmd_network(graph_path, topology, n_parties, noise, sweep, format, out_path, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
}

}  // namespace nqkd::cli
