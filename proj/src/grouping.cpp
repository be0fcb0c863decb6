#include "gqpp/grouping.hpp"

#include <algorithm>
#include <numeric>

#include "gqpp/error.hpp"
#include "gqpp/log.hpp"
#include "gqpp/rng.hpp"

namespace gqpp {
namespace {

// Stream ids for the per-epoch generators.
enum : std::uint64_t { kRandomStream = 1, kQueryStream = 2, kShuffleStream = 3 };

std::vector<std::vector<GroupItem>> pairs_by_query(const RetrievalRun& run, std::size_t depth) {
  std::vector<std::vector<GroupItem>> out;
  std::size_t short_queries = 0;
  for (const auto& [qid, entries] : run.lists()) {
    if (entries.size() < depth) ++short_queries;
    std::vector<GroupItem> items;
    for (std::size_t i = 0; i < std::min(depth, entries.size()); ++i)
      items.push_back({qid, entries[i].docid, entries[i].rank});
    out.push_back(std::move(items));
  }
  if (short_queries > 0)
    warn_once("some queries have fewer than " + std::to_string(depth) +
              " retrieved documents; using the available ranks");
  return out;
}

Group make_group(std::vector<GroupItem> items, std::vector<int> position_ids, GroupKind kind, std::size_t n) {
  Group g;
  g.mask.assign(items.size(), 1);
  g.items = std::move(items);
  g.position_ids = std::move(position_ids);
  g.kind = kind;
  return pad_group(std::move(g), n);
}

void random_groups(const std::vector<std::vector<GroupItem>>& by_query, std::size_t n, std::uint64_t seed,
                   std::size_t epoch, std::vector<Group>& out) {
  std::vector<GroupItem> all;
  for (const auto& q : by_query) all.insert(all.end(), q.begin(), q.end());
  Rng rng(derive_seed(seed, kRandomStream, epoch));
  rng.shuffle(std::span<GroupItem>(all));
  for (std::size_t start = 0; start < all.size(); start += n) {
    std::size_t end = std::min(start + n, all.size());
    std::vector<GroupItem> items(all.begin() + static_cast<std::ptrdiff_t>(start),
                                 all.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<int> pos(items.size());
    std::iota(pos.begin(), pos.end(), 0);
    out.push_back(make_group(std::move(items), std::move(pos), GroupKind::Random, n));
  }
}

void doc_groups(const std::vector<std::vector<GroupItem>>& by_query, std::size_t n, std::vector<Group>& out) {
  for (const auto& q : by_query) {
    for (std::size_t start = 0; start < q.size(); start += n) {
      std::size_t end = std::min(start + n, q.size());
      std::vector<GroupItem> items(q.begin() + static_cast<std::ptrdiff_t>(start),
                                   q.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> pos;
      for (const auto& it : items) pos.push_back((it.rank - 1) % static_cast<int>(n));
      out.push_back(make_group(std::move(items), std::move(pos), GroupKind::Doc, n));
    }
  }
}

void query_groups(const std::vector<std::vector<GroupItem>>& by_query, std::size_t n, std::uint64_t seed,
                  std::size_t epoch, const QueryScores& initial_qpp, std::vector<Group>& out) {
  std::size_t max_depth = 0;
  for (const auto& q : by_query) {
    max_depth = std::max(max_depth, q.size());
    if (!q.empty() && !initial_qpp.count(q.front().qid))
      throw InputError("initial QPP score missing for query '" + q.front().qid + "'");
  }
  Rng rng(derive_seed(seed, kQueryStream, epoch));
  for (std::size_t i = 0; i < max_depth; ++i) {
    std::vector<const GroupItem*> layer;
    for (const auto& q : by_query)
      if (i < q.size()) layer.push_back(&q[i]);
    rng.shuffle(std::span<const GroupItem*>(layer));
    for (std::size_t start = 0; start < layer.size(); start += n) {
      std::size_t end = std::min(start + n, layer.size());
      std::vector<GroupItem> items;
      for (std::size_t j = start; j < end; ++j) items.push_back(*layer[j]);
      // Position id = rank of the slot's query under the initial predictor
      // (descending), ties by ascending qid.
      std::vector<std::size_t> order(items.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = initial_qpp.at(items[a].qid), sb = initial_qpp.at(items[b].qid);
        if (sa != sb) return sa > sb;
        return items[a].qid < items[b].qid;
      });
      std::vector<int> pos(items.size());
      for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = static_cast<int>(r);
      out.push_back(make_group(std::move(items), std::move(pos), GroupKind::Query, n));
    }
  }
}

}  // namespace

std::string strategy_name(GroupingStrategy s) {
  switch (s) {
    case GroupingStrategy::RandomOrder: return "random";
    case GroupingStrategy::QueryOrder: return "query";
    case GroupingStrategy::DocOrder: return "doc";
    case GroupingStrategy::QueryPlusDoc: return "query+doc";
    case GroupingStrategy::RQD: return "r+q+d";
  }
  return "?";
}

GroupingStrategy parse_strategy(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "random" || s == "random-order") return GroupingStrategy::RandomOrder;
  if (s == "query" || s == "query-order") return GroupingStrategy::QueryOrder;
  if (s == "doc" || s == "doc-order") return GroupingStrategy::DocOrder;
  if (s == "query+doc" || s == "qd") return GroupingStrategy::QueryPlusDoc;
  if (s == "r+q+d" || s == "rqd") return GroupingStrategy::RQD;
  throw InputError("unknown grouping strategy '" + name + "' (random, query, doc, query+doc, r+q+d)");
}

std::string group_kind_name(GroupKind k) {
  switch (k) {
    case GroupKind::Random: return "random";
    case GroupKind::Query: return "query";
    case GroupKind::Doc: return "doc";
  }
  return "?";
}

GroupingStrategy default_inference_strategy(GroupingStrategy trained) {
  switch (trained) {
    case GroupingStrategy::RandomOrder:
    case GroupingStrategy::QueryOrder: return trained;
    default: return GroupingStrategy::DocOrder;
  }
}

std::size_t Group::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

Group pad_group(Group group, std::size_t n) {
  if (group.items.empty()) throw InputError("cannot pad an empty group");
  if (group.items.size() > n)
    throw ContractError("group of " + std::to_string(group.items.size()) + " items exceeds size " + std::to_string(n));
  while (group.items.size() < n) {
    group.position_ids.push_back(static_cast<int>(group.items.size()));
    group.items.push_back(GroupItem{});
    group.mask.push_back(0);
  }
  return group;
}

std::vector<Group> build_groups(GroupingStrategy strategy, const RetrievalRun& run, std::size_t depth, std::size_t n,
                                std::uint64_t seed, const QueryScores& initial_qpp, std::size_t epoch) {
  if (depth < 1) throw ContractError("build_groups: depth must be >= 1");
  if (n < 1) throw ContractError("build_groups: group size must be >= 1");
  const auto by_query = pairs_by_query(run, depth);
  std::vector<Group> groups;
  const bool use_random = strategy == GroupingStrategy::RandomOrder || strategy == GroupingStrategy::RQD;
  const bool use_query = strategy == GroupingStrategy::QueryOrder || strategy == GroupingStrategy::QueryPlusDoc ||
                         strategy == GroupingStrategy::RQD;
  const bool use_doc = strategy == GroupingStrategy::DocOrder || strategy == GroupingStrategy::QueryPlusDoc ||
                       strategy == GroupingStrategy::RQD;
  if (use_random) random_groups(by_query, n, seed, epoch, groups);
  if (use_query) query_groups(by_query, n, seed, epoch, initial_qpp, groups);
  if (use_doc) doc_groups(by_query, n, groups);
  Rng rng(derive_seed(seed, kShuffleStream, epoch));
  rng.shuffle(std::span<Group>(groups));
  return groups;
}

std::string dump_groups(const std::vector<Group>& groups) {
  std::string out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& grp = groups[g];
    for (std::size_t s = 0; s < grp.size(); ++s) {
      const auto& it = grp.items[s];
      out += std::to_string(g) + " " + std::to_string(s) + " " + (it.qid.empty() ? "-" : it.qid) + " " +
             (it.docid.empty() ? "-" : it.docid) + " " + std::to_string(grp.position_ids[s]) + " " +
             std::to_string(grp.mask[s]) + " " + group_kind_name(grp.kind) + "\n";
    }
  }
  return out;
}

}  // namespace gqpp
