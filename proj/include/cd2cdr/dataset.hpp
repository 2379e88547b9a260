#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cd2cdr/mat.hpp"

namespace cd2cdr {

enum class Domain : int { kA = 0, kB = 1 };
inline constexpr std::array<Domain, 2> kDomains{Domain::kA, Domain::kB};
inline std::string_view domain_name(Domain d) { return d == Domain::kA ? "A" : "B"; }
inline Domain other(Domain d) { return d == Domain::kA ? Domain::kB : Domain::kA; }

struct Interaction {
  int user = 0;
  int item = 0;
  std::int64_t timestamp = 0;
};

// Implicit-feedback interactions of one domain. Interactions are grouped by user and
// ordered by (timestamp, original file order) within each user.
struct DomainDataset {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<Interaction> interactions;
  std::optional<Mat> item_features;  // n x d_raw
  std::optional<Mat> user_features;  // m x d_raw_u

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_items() const { return item_ids.size(); }
  // Item indices per user in interaction order.
  std::vector<std::vector<int>> items_by_user() const;
  // Indices in range, no duplicate pairs, every user has an interaction. Throws DataError.
  void validate() const;
};

// Two domains over one ordered, fully shared user list.
struct DualDomainDataset {
  std::vector<std::string> users;
  DomainDataset a;
  DomainDataset b;

  const DomainDataset& domain(Domain d) const { return d == Domain::kA ? a : b; }
  DomainDataset& domain(Domain d) { return d == Domain::kA ? a : b; }
  std::size_t num_users() const { return users.size(); }
  void validate() const;
};

/// Reads `user<TAB>item<TAB>timestamp` rows ('#' lines ignored), drops duplicate pairs
/// keeping the earliest timestamp, then removes users and items with fewer than
/// `min_interactions` until a fixpoint is reached. Ids are indexed densely in order of
/// first appearance among surviving rows.
DomainDataset load_domain_tsv(const std::filesystem::path& path, int min_interactions);
DomainDataset parse_domain_tsv(std::string_view text, int min_interactions,
                               const std::string& source = "<memory>");
void write_domain_tsv(const std::filesystem::path& path, const DomainDataset& ds);

/// Feature file: header `n d_raw` followed by n rows of d_raw reals.
Mat load_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Mat& features);

/// Restricts both domains to their common users (ordered as in domain A) and re-indexes.
DualDomainDataset align_domains(const DomainDataset& a, const DomainDataset& b);

}  // namespace cd2cdr
