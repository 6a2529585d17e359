#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "adafilter/error.hpp"
#include "adafilter/measures.hpp"

namespace adafilter {

namespace {

constexpr double kFlowEps = 1e-15;

// Dinic max-flow on real capacities.
class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t nodes) : adj_(nodes), level_(nodes), cursor_(nodes) {}

  void add_edge(std::size_t from, std::size_t to, double capacity) {
    adj_[from].push_back(edges_.size());
    edges_.push_back({to, capacity});
    adj_[to].push_back(edges_.size());
    edges_.push_back({from, 0.0});
  }

  double max_flow(std::size_t source, std::size_t sink) {
    double total = 0.0;
    while (build_levels(source, sink)) {
      std::fill(cursor_.begin(), cursor_.end(), 0);
      while (true) {
        const double pushed = push(source, sink, std::numeric_limits<double>::infinity());
        if (pushed <= kFlowEps) break;
        total += pushed;
      }
    }
    return total;
  }

 private:
  struct Edge {
    std::size_t to;
    double capacity;
  };

  bool build_levels(std::size_t source, std::size_t sink) {
    std::fill(level_.begin(), level_.end(), -1);
    level_[source] = 0;
    std::queue<std::size_t> queue;
    queue.push(source);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop();
      for (std::size_t e : adj_[v]) {
        if (edges_[e].capacity > kFlowEps && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[v] + 1;
          queue.push(edges_[e].to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  double push(std::size_t v, std::size_t sink, double limit) {
    if (v == sink) return limit;
    for (std::size_t& i = cursor_[v]; i < adj_[v].size(); ++i) {
      const std::size_t e = adj_[v][i];
      Edge& edge = edges_[e];
      if (edge.capacity <= kFlowEps || level_[edge.to] != level_[v] + 1) continue;
      const double pushed = push(edge.to, sink, std::min(limit, edge.capacity));
      if (pushed > kFlowEps) {
        edge.capacity -= pushed;
        edges_[e ^ 1].capacity += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
};

void require_labelled_probability(const DiscreteMeasure& m) {
  if (!m.has_labels()) {
    throw Error(ErrorCode::missing_label, "Prokhorov distance needs labelled supports");
  }
  if (!m.is_probability(1e-9)) {
    throw Error(ErrorCode::invalid_measure, "Prokhorov distance needs probability measures");
  }
}

}  // namespace

bool prokhorov_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double radius,
                        double slack) {
  const auto xs = mu.labels();
  const auto ys = nu.labels();
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  const std::size_t source = n + m;
  const std::size_t sink = n + m + 1;
  FlowNetwork net(n + m + 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (mu[i] > 0.0) net.add_edge(source, i, mu[i]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (nu[j] > 0.0) net.add_edge(n + j, sink, nu[j]);
  }
  // Small absolute tolerance so that points exactly `radius` apart connect.
  const double reach = radius + 1e-12 * std::max(1.0, radius);
  for (std::size_t i = 0; i < n; ++i) {
    if (mu[i] == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (nu[j] > 0.0 && std::abs(xs[i] - ys[j]) <= reach) net.add_edge(i, n + j, mu[i]);
    }
  }
  // max-flow = mu(E) - max_A (mu(A) - nu(A^radius)).
  return net.max_flow(source, sink) >= mu.total_mass() - slack - 1e-12;
}

double prokhorov_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tolerance) {
  require_labelled_probability(mu);
  require_labelled_probability(nu);
  auto feasible = [&](double alpha) {
    return prokhorov_feasible(mu, nu, alpha, alpha) && prokhorov_feasible(nu, mu, alpha, alpha);
  };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;  // always feasible: slack 1 covers any mass
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace adafilter
