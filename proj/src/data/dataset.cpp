#include "cd2cdr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

std::vector<std::vector<int>> DomainDataset::items_by_user() const {
  std::vector<std::vector<int>> out(num_users());
  for (const auto& it : interactions) out[static_cast<std::size_t>(it.user)].push_back(it.item);
  return out;
}

void DomainDataset::validate() const {
  std::set<std::pair<int, int>> seen;
  std::vector<int> count(num_users(), 0);
  for (const auto& it : interactions) {
    if (it.user < 0 || static_cast<std::size_t>(it.user) >= num_users() || it.item < 0 ||
        static_cast<std::size_t>(it.item) >= num_items()) {
      throw DataError("dataset: interaction index out of range");
    }
    if (!seen.insert({it.user, it.item}).second) throw DataError("dataset: duplicate interaction");
    ++count[static_cast<std::size_t>(it.user)];
  }
  for (std::size_t u = 0; u < count.size(); ++u) {
    if (count[u] == 0) throw DataError("dataset: user " + user_ids[u] + " has no interactions");
  }
  if (item_features && item_features->rows() != num_items()) {
    throw DataError("dataset: item feature rows do not match item count");
  }
  if (user_features && user_features->rows() != num_users()) {
    throw DataError("dataset: user feature rows do not match user count");
  }
}

void DualDomainDataset::validate() const {
  a.validate();
  b.validate();
  if (a.user_ids != users || b.user_ids != users) {
    throw DataError("dual dataset: domains do not share the same ordered user list");
  }
}

namespace {

struct RawRow {
  std::string user;
  std::string item;
  std::int64_t timestamp;
  std::size_t order;
};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    parts.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

DomainDataset parse_domain_tsv(std::string_view text, int min_interactions, const std::string& source) {
  if (min_interactions < 1) throw std::invalid_argument("min_interactions must be >= 1");

  // (user, item) -> earliest row
  std::map<std::pair<std::string, std::string>, RawRow> dedup;
  std::size_t line_no = 0;
  std::size_t order = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
      throw DataError(source + ":" + std::to_string(line_no) +
                      ": expected user<TAB>item<TAB>timestamp");
    }
    std::int64_t ts = 0;
    const auto [ptr, ec] = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), ts);
    if (ec != std::errc() || ptr != cols[2].data() + cols[2].size()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": timestamp is not an integer");
    }
    RawRow row{std::string(cols[0]), std::string(cols[1]), ts, order++};
    auto key = std::make_pair(row.user, row.item);
    auto found = dedup.find(key);
    if (found == dedup.end()) {
      dedup.emplace(std::move(key), std::move(row));
    } else if (ts < found->second.timestamp) {
      found->second.timestamp = ts;
      found->second.order = row.order;
    }
    if (end == text.size()) break;
  }

  std::vector<RawRow> rows;
  rows.reserve(dedup.size());
  for (auto& [k, r] : dedup) rows.push_back(std::move(r));
  std::sort(rows.begin(), rows.end(), [](const RawRow& x, const RawRow& y) { return x.order < y.order; });

  // Iterative filtering until every user and item meets the threshold.
  const auto threshold = static_cast<std::size_t>(min_interactions);
  while (true) {
    std::unordered_map<std::string, std::size_t> ucount, icount;
    for (const auto& r : rows) {
      ++ucount[r.user];
      ++icount[r.item];
    }
    const auto before = rows.size();
    std::erase_if(rows, [&](const RawRow& r) {
      return ucount[r.user] < threshold || icount[r.item] < threshold;
    });
    if (rows.size() == before) break;
  }
  if (rows.empty()) throw DataError(source + ": no interactions left after filtering");

  DomainDataset ds;
  std::unordered_map<std::string, int> uidx, iidx;
  for (const auto& r : rows) {
    if (uidx.emplace(r.user, static_cast<int>(ds.user_ids.size())).second) ds.user_ids.push_back(r.user);
    if (iidx.emplace(r.item, static_cast<int>(ds.item_ids.size())).second) ds.item_ids.push_back(r.item);
  }
  // rows are in file order, so a stable sort by (user, timestamp) breaks ties by file order
  std::stable_sort(rows.begin(), rows.end(), [&](const RawRow& x, const RawRow& y) {
    const int ux = uidx[x.user], uy = uidx[y.user];
    if (ux != uy) return ux < uy;
    return x.timestamp < y.timestamp;
  });
  ds.interactions.reserve(rows.size());
  for (const auto& r : rows) ds.interactions.push_back({uidx[r.user], iidx[r.item], r.timestamp});
  return ds;
}

DomainDataset load_domain_tsv(const std::filesystem::path& path, int min_interactions) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open interaction file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_domain_tsv(buf.str(), min_interactions, path.string());
}

void write_domain_tsv(const std::filesystem::path& path, const DomainDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# user_id\titem_id\ttimestamp\n";
  for (const auto& it : ds.interactions) {
    out << ds.user_ids[static_cast<std::size_t>(it.user)] << '\t'
        << ds.item_ids[static_cast<std::size_t>(it.item)] << '\t' << it.timestamp << '\n';
  }
}

Mat load_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path.string());
  std::size_t n = 0, d = 0;
  if (!(in >> n >> d) || d == 0) throw DataError(path.string() + ": bad header, expected `n d_raw`");
  Mat m(n, d);
  for (std::size_t i = 0; i < n * d; ++i) {
    if (!(in >> m[i])) {
      throw DataError(path.string() + ": expected " + std::to_string(n * d) + " values, got " +
                      std::to_string(i));
    }
  }
  require_finite(m, "feature file");
  return m;
}

void write_feature_file(const std::filesystem::path& path, const Mat& features) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << features.rows() << ' ' << features.cols() << '\n';
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) out << (c ? " " : "") << features(r, c);
    out << '\n';
  }
}

namespace {

DomainDataset restrict_users(const DomainDataset& src, const std::vector<std::string>& users) {
  std::unordered_map<std::string, int> new_index;
  for (std::size_t i = 0; i < users.size(); ++i) new_index.emplace(users[i], static_cast<int>(i));

  DomainDataset out;
  out.user_ids = users;
  out.item_ids = src.item_ids;
  for (const auto& it : src.interactions) {
    auto f = new_index.find(src.user_ids[static_cast<std::size_t>(it.user)]);
    if (f != new_index.end()) out.interactions.push_back({f->second, it.item, it.timestamp});
  }
  std::stable_sort(out.interactions.begin(), out.interactions.end(),
                   [](const Interaction& x, const Interaction& y) { return x.user < y.user; });
  out.item_features = src.item_features;
  if (src.user_features) {
    std::unordered_map<std::string, std::size_t> old_index;
    for (std::size_t i = 0; i < src.user_ids.size(); ++i) old_index.emplace(src.user_ids[i], i);
    Mat feats(users.size(), src.user_features->cols());
    for (std::size_t i = 0; i < users.size(); ++i) {
      auto row = src.user_features->row(old_index.at(users[i]));
      std::copy(row.begin(), row.end(), feats.row(i).begin());
    }
    out.user_features = std::move(feats);
  }
  return out;
}

}  // namespace

DualDomainDataset align_domains(const DomainDataset& a, const DomainDataset& b) {
  std::set<std::string> in_b(b.user_ids.begin(), b.user_ids.end());
  DualDomainDataset dual;
  for (const auto& u : a.user_ids) {
    if (in_b.count(u)) dual.users.push_back(u);
  }
  if (dual.users.empty()) throw DataError("domains share no users");
  dual.a = restrict_users(a, dual.users);
  dual.b = restrict_users(b, dual.users);
  dual.validate();
  return dual;
}

}  // namespace cd2cdr
