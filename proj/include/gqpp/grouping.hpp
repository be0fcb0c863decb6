#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gqpp/baselines.hpp"
#include "gqpp/data_model.hpp"

namespace gqpp {

/// Ordering context a model is trained with.
enum class GroupingStrategy { RandomOrder, QueryOrder, DocOrder, QueryPlusDoc, RQD };

/// Kind of one concrete group.
enum class GroupKind { Random, Query, Doc };

std::string strategy_name(GroupingStrategy s);
GroupingStrategy parse_strategy(const std::string& name);
std::string group_kind_name(GroupKind k);

/// Strategy used to group queries at inference time for a model trained
/// with `trained`: RandomOrder and QueryOrder keep their own ordering, the
/// document-aware strategies use DocOrder.
GroupingStrategy default_inference_strategy(GroupingStrategy trained);

struct GroupItem {
  std::string qid;
  std::string docid;
  int rank = 0;  // retrieval rank, 0 for padding
  bool operator==(const GroupItem&) const = default;
};

struct Group {
  std::vector<GroupItem> items;
  std::vector<int> position_ids;
  std::vector<std::uint8_t> mask;  // 1 = valid slot
  GroupKind kind = GroupKind::Random;

  std::size_t size() const { return items.size(); }
  std::size_t valid_count() const;
  bool operator==(const Group&) const = default;
};

/// Builds the groups of one epoch. `initial_qpp` must cover every query when
/// the strategy uses query ordering. Every group is padded to n slots.
std::vector<Group> build_groups(GroupingStrategy strategy, const RetrievalRun& run, std::size_t depth, std::size_t n,
                                std::uint64_t seed, const QueryScores& initial_qpp = {}, std::size_t epoch = 0);

/// Appends masked slots until the group has n slots.
Group pad_group(Group group, std::size_t n);

/// Debug dump: `group_id slot qid docid position_id mask kind` lines.
std::string dump_groups(const std::vector<Group>& groups);

}  // namespace gqpp
