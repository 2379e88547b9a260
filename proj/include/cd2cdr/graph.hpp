#pragma once

#include <utility>
#include <vector>

#include "cd2cdr/mat.hpp"

namespace cd2cdr {

// User-item bipartite interaction graph of one domain.
struct InteractionGraph {
  std::vector<std::vector<int>> user_items;
  std::vector<std::vector<int>> item_users;

  std::size_t num_users() const { return user_items.size(); }
  std::size_t num_items() const { return item_users.size(); }

  static InteractionGraph from_user_items(std::vector<std::vector<int>> user_items, std::size_t num_items);
};

struct Propagated {
  Mat users;
  Mat items;
};

/// Light graph convolution: each layer replaces a node by the sum of its neighbours
/// scaled by 1/sqrt(deg(u) deg(i)); no transforms, no nonlinearity. The readout is the
/// mean of layers 0..depth. Isolated nodes keep their embedding in every layer.
/// The operator is symmetric, so the same call back-propagates gradients.
Propagated propagate_graph(const InteractionGraph& graph, const Mat& users, const Mat& items, int depth);

}  // namespace cd2cdr
