#pragma once

// Finite combinatorial optimization instances: explicit configuration sets
// with nonnegative energies and a connected move graph.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qsa/error.hpp"
#include "qsa/random.hpp"

namespace qsa {

/// Largest configuration count accepted by the instance generators.
inline constexpr std::size_t kMaxConfigurations = std::size_t{1} << 12;

/// Energies closer than this (relative to max(1, E_M)) count as equal when
/// scanning for distinct levels.
inline constexpr double kEnergyTolerance = 1e-12;

using Edge = std::pair<std::size_t, std::size_t>;

/// Subtracts the minimum so the smallest energy is exactly zero.
inline std::vector<double> shift_energies(std::span<const double> raw) {
  require(!raw.empty(), ErrorKind::invalid_instance, "energy list is empty");
  for (double e : raw) {
    require(std::isfinite(e), ErrorKind::invalid_instance,
            "energy list contains a non-finite value");
  }
  const double lowest = *std::min_element(raw.begin(), raw.end());
  std::vector<double> shifted(raw.size());
  std::transform(raw.begin(), raw.end(), shifted.begin(),
                 [lowest](double e) { return e - lowest; });
  return shifted;
}

struct SpectrumSummary {
  double e_max = 0.0;
  std::optional<double> gamma;  // empty when the energy is constant
  std::vector<std::size_t> ground_set;

  bool constant_energy() const { return !gamma.has_value(); }

  double require_gamma() const {
    require(gamma.has_value(), ErrorKind::degenerate_instance,
            "energy is constant: the energy gap is undefined");
    return *gamma;
  }
};

class ProblemInstance {
 public:
  ProblemInstance(std::span<const double> raw_energies, std::span<const Edge> moves,
                  std::vector<std::string> labels = {})
      : energies_(shift_energies(raw_energies)),
        adjacency_(energies_.size()),
        labels_(std::move(labels)) {
    const std::size_t d = energies_.size();
    require(d >= 2, ErrorKind::invalid_instance,
            "an instance needs at least two configurations");
    require(labels_.empty() || labels_.size() == d, ErrorKind::invalid_instance,
            "label count does not match configuration count");
    std::vector<std::set<std::size_t>> sets(d);
    for (const auto& [a, b] : moves) {
      require(a < d && b < d, ErrorKind::invalid_instance,
              "move references configuration " + std::to_string(std::max(a, b)) +
                  " outside 0.." + std::to_string(d - 1));
      require(a != b, ErrorKind::invalid_instance,
              "move graph has a self-loop at " + std::to_string(a));
      sets[a].insert(b);
      sets[b].insert(a);
    }
    for (std::size_t i = 0; i < d; ++i) {
      adjacency_[i].assign(sets[i].begin(), sets[i].end());
      max_degree_ = std::max(max_degree_, adjacency_[i].size());
    }
    require(connected(), ErrorKind::invalid_instance, "move graph is disconnected");
  }

  std::size_t size() const { return energies_.size(); }
  std::span<const double> energies() const { return energies_; }
  double energy(std::size_t sigma) const { return energies_[sigma]; }
  std::span<const std::size_t> neighbors(std::size_t sigma) const {
    return adjacency_[sigma];
  }
  std::size_t max_degree() const { return max_degree_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t a = 0; a < size(); ++a) {
      for (std::size_t b : adjacency_[a]) {
        if (a < b) out.emplace_back(a, b);
      }
    }
    return out;
  }

 private:
  bool connected() const {
    std::vector<bool> seen(size(), false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!frontier.empty()) {
      const std::size_t v = frontier.front();
      frontier.pop();
      for (std::size_t n : adjacency_[v]) {
        if (!seen[n]) {
          seen[n] = true;
          ++count;
          frontier.push(n);
        }
      }
    }
    return count == size();
  }

  std::vector<double> energies_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::string> labels_;
  std::size_t max_degree_ = 0;
};

inline SpectrumSummary spectrum_summary(const ProblemInstance& instance) {
  SpectrumSummary summary;
  const auto energies = instance.energies();
  for (double e : energies) summary.e_max = std::max(summary.e_max, std::abs(e));
  const double tol = kEnergyTolerance * std::max(1.0, summary.e_max);

  double second = summary.e_max;
  bool found_second = false;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (energies[i] <= tol) {
      summary.ground_set.push_back(i);
    } else if (energies[i] <= second) {
      second = energies[i];
      found_second = true;
    }
  }
  if (found_second) summary.gamma = second;
  return summary;
}

/// Spin-chain instance. Configuration index is the big-endian bit string
/// with bit i = (1 - s_i) / 2, so index 0 is all spins up. Moves are single
/// spin flips.
inline ProblemInstance ising_chain(int n_spins, double coupling,
                                   std::span<const double> fields, bool periodic) {
  require(n_spins >= 2, ErrorKind::invalid_instance, "ising chain needs n_spins >= 2");
  require((std::size_t{1} << n_spins) <= kMaxConfigurations,
          ErrorKind::instance_too_large,
          "ising chain with " + std::to_string(n_spins) + " spins exceeds the cap of " +
              std::to_string(kMaxConfigurations) + " configurations");
  require(fields.size() == static_cast<std::size_t>(n_spins),
          ErrorKind::invalid_instance, "field count must equal n_spins");

  const std::size_t d = std::size_t{1} << n_spins;
  const auto spin = [n_spins](std::size_t index, int i) {
    return ((index >> (n_spins - 1 - i)) & 1U) ? -1.0 : 1.0;
  };

  std::vector<double> raw(d);
  std::vector<Edge> moves;
  std::vector<std::string> labels(d);
  for (std::size_t index = 0; index < d; ++index) {
    double e = 0.0;
    for (int i = 0; i + 1 < n_spins; ++i) e -= coupling * spin(index, i) * spin(index, i + 1);
    if (periodic && n_spins > 2) e -= coupling * spin(index, n_spins - 1) * spin(index, 0);
    for (int i = 0; i < n_spins; ++i) e -= fields[i] * spin(index, i);
    raw[index] = e;
    for (int i = 0; i < n_spins; ++i) {
      const std::size_t flipped = index ^ (std::size_t{1} << (n_spins - 1 - i));
      if (index < flipped) moves.emplace_back(index, flipped);
      labels[index] += spin(index, i) > 0 ? 'u' : 'd';
    }
  }
  return ProblemInstance(raw, moves, std::move(labels));
}

/// Ising chain with fields drawn uniformly from [-field_scale, field_scale].
inline ProblemInstance random_field_ising_chain(int n_spins, double coupling,
                                                double field_scale, std::uint64_t seed,
                                                bool periodic = false) {
  require(n_spins >= 2, ErrorKind::invalid_instance, "ising chain needs n_spins >= 2");
  Engine engine = make_engine(seed, "random-field", 0);
  std::vector<double> fields(static_cast<std::size_t>(n_spins));
  for (double& h : fields) h = field_scale * (2.0 * uniform01(engine) - 1.0);
  return ising_chain(n_spins, coupling, fields, periodic);
}

/// Two wells separated by a barrier configuration: path 0 - 1 - 2 with
/// E = (0, barrier, false_well), plus a dead-end configuration 3 attached to
/// 0 at energy `ceiling`. The ceiling pins E_M, and for barrier > false_well
/// the energy gap stays at false_well, so only the spectral gap moves with
/// the barrier height.
inline ProblemInstance two_basin(double barrier, double false_well = 0.5,
                                 double ceiling = 6.0) {
  require(false_well > 0.0 && barrier > false_well && ceiling >= barrier,
          ErrorKind::invalid_instance,
          "two-basin instance needs 0 < false_well < barrier <= ceiling");
  const std::vector<double> energies{0.0, barrier, false_well, ceiling};
  const std::vector<Edge> moves{{0, 1}, {1, 2}, {0, 3}};
  return ProblemInstance(energies, moves, {"ground", "barrier", "false-well", "ceiling"});
}

/// Reads {"d": int, "energies": [real], "moves": [[int, int]], "labels": [string]?}.
inline ProblemInstance load_instance(const nlohmann::json& document) {
  try {
    require(document.is_object(), ErrorKind::invalid_instance,
            "instance document must be a JSON object");
    for (const auto& [key, value] : document.items()) {
      require(key == "d" || key == "energies" || key == "moves" || key == "labels",
              ErrorKind::invalid_instance, "unknown instance field '" + key + "'");
    }
    const auto d = document.at("d").get<std::size_t>();
    const auto energies = document.at("energies").get<std::vector<double>>();
    require(energies.size() == d, ErrorKind::invalid_instance,
            "d = " + std::to_string(d) + " but " + std::to_string(energies.size()) +
                " energies given");
    require(d <= kMaxConfigurations, ErrorKind::instance_too_large,
            "instance with d = " + std::to_string(d) + " exceeds the cap of " +
                std::to_string(kMaxConfigurations));
    std::vector<Edge> moves;
    for (const auto& move : document.at("moves")) {
      require(move.is_array() && move.size() == 2, ErrorKind::invalid_instance,
              "each move must be a pair [a, b]");
      moves.emplace_back(move[0].get<std::size_t>(), move[1].get<std::size_t>());
    }
    std::vector<std::string> labels;
    if (document.contains("labels")) labels = document["labels"].get<std::vector<std::string>>();
    return ProblemInstance(energies, moves, std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_instance, std::string("malformed instance document: ") + e.what());
  }
}

inline nlohmann::json instance_document(const ProblemInstance& instance) {
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& [a, b] : instance.edges()) moves.push_back({a, b});
  nlohmann::json doc{{"d", instance.size()},
                     {"energies", std::vector<double>(instance.energies().begin(),
                                                      instance.energies().end())},
                     {"moves", moves}};
  if (!instance.labels().empty()) doc["labels"] = instance.labels();
  return doc;
}

}  // namespace qsa
