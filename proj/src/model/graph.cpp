#include "cd2cdr/graph.hpp"

#include <cmath>
#include <stdexcept>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

InteractionGraph InteractionGraph::from_user_items(std::vector<std::vector<int>> user_items, std::size_t num_items) {
  InteractionGraph g;
  g.item_users.resize(num_items);
  for (std::size_t u = 0; u < user_items.size(); ++u) {
    for (int i : user_items[u]) {
      if (i < 0 || static_cast<std::size_t>(i) >= num_items) throw ShapeError("graph: item index out of range");
      g.item_users[static_cast<std::size_t>(i)].push_back(static_cast<int>(u));
    }
  }
  g.user_items = std::move(user_items);
  return g;
}

Propagated propagate_graph(const InteractionGraph& graph, const Mat& users, const Mat& items, int depth) {
  if (depth < 0) throw std::invalid_argument("propagate_graph: depth must be >= 0");
  require_shape(users, graph.num_users(), users.cols(), "propagate_graph users");
  require_shape(items, graph.num_items(), users.cols(), "propagate_graph items");
  const std::size_t d = users.cols();

  std::vector<double> inv_sqrt_u(graph.num_users()), inv_sqrt_i(graph.num_items());
  for (std::size_t u = 0; u < graph.num_users(); ++u) {
    const auto deg = graph.user_items[u].size();
    inv_sqrt_u[u] = deg ? 1.0 / std::sqrt(static_cast<double>(deg)) : 0.0;
  }
  for (std::size_t i = 0; i < graph.num_items(); ++i) {
    const auto deg = graph.item_users[i].size();
    inv_sqrt_i[i] = deg ? 1.0 / std::sqrt(static_cast<double>(deg)) : 0.0;
  }

  Propagated acc{users, items};
  Mat cur_u = users, cur_v = items;
  for (int layer = 0; layer < depth; ++layer) {
    Mat next_u(cur_u.rows(), d), next_v(cur_v.rows(), d);
    for (std::size_t u = 0; u < graph.num_users(); ++u) {
      auto dst = next_u.row(u);
      if (graph.user_items[u].empty()) {
        std::copy(cur_u.row(u).begin(), cur_u.row(u).end(), dst.begin());
        continue;
      }
      for (int i : graph.user_items[u]) {
        const double w = inv_sqrt_u[u] * inv_sqrt_i[static_cast<std::size_t>(i)];
        auto src = cur_v.row(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < d; ++k) dst[k] += w * src[k];
      }
    }
    for (std::size_t i = 0; i < graph.num_items(); ++i) {
      auto dst = next_v.row(i);
      if (graph.item_users[i].empty()) {
        std::copy(cur_v.row(i).begin(), cur_v.row(i).end(), dst.begin());
        continue;
      }
      for (int u : graph.item_users[i]) {
        const double w = inv_sqrt_u[static_cast<std::size_t>(u)] * inv_sqrt_i[i];
        auto src = cur_u.row(static_cast<std::size_t>(u));
        for (std::size_t k = 0; k < d; ++k) dst[k] += w * src[k];
      }
    }
    acc.users += next_u;
    acc.items += next_v;
    cur_u = std::move(next_u);
    cur_v = std::move(next_v);
  }
  const double inv = 1.0 / static_cast<double>(depth + 1);
  acc.users *= inv;
  acc.items *= inv;
  return acc;
}

}  // namespace cd2cdr
