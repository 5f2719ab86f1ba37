#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fusionette/embedding_store.hpp"

namespace fusionette {

/// Raw CrisisMMD category name -> class index for one task.
///
/// Category names are matched case-insensitively with '_' and ' '
/// interchangeable, so both "injured_or_dead_people" and
/// "injured or dead people" resolve.
class LabelMap {
 public:
  /// Task 1: informativeness (2 classes), Task 2: humanitarian (5 classes,
  /// three person-related categories merged), Task 3: damage severity (3).
  static LabelMap for_task(int task_id);

  int task_id() const { return task_id_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t num_classes() const { return class_names_.size(); }

  /// Throws InvalidArgument for a category the task does not know.
  std::size_t index_of(std::string_view raw_category) const;
  bool contains(std::string_view raw_category) const;

  /// All raw categories the map accepts, normalized.
  std::vector<std::string> raw_categories() const;

 private:
  int task_id_ = 0;
  std::vector<std::string> class_names_;
  std::vector<std::pair<std::string, std::size_t>> entries_;
};

/// A record before label mapping: the raw category string from the
/// annotation files.
struct RawRecord {
  std::string id;
  std::vector<double> f_i;
  std::vector<double> f_t;
  std::string category;
};

DatasetSplit apply_label_map(const std::vector<RawRecord>& rows, const LabelMap& map,
                             SplitName split);

/// Published split sizes of one task.
struct Table1Row {
  int task_id = 0;
  std::uint64_t train = 0;
  std::uint64_t validation = 0;
  std::uint64_t test = 0;

  std::uint64_t total() const { return train + validation + test; }
  std::uint64_t count(SplitName s) const;
};

/// Throws InvalidArgument for task ids outside 1..3.
Table1Row table1_row(int task_id);

struct SplitCount {
  SplitName split = SplitName::Train;
  std::uint64_t count = 0;
};

struct CountCheck {
  SplitName split = SplitName::Train;
  std::uint64_t expected = 0;
  std::uint64_t actual = 0;
  std::int64_t delta = 0;  ///< actual - expected
  bool pass = false;
};

struct CountsReport {
  int task_id = 0;
  std::vector<CountCheck> checks;
  std::uint64_t expected_total = 0;
  std::uint64_t actual_total = 0;
  bool pass = false;
};

/// Compares observed split sizes against the expected row. Never throws for a
/// mismatch; the report carries per-split deltas. The total is only compared
/// when all three splits are supplied.
CountsReport validate_counts(std::span<const SplitCount> observed, const Table1Row& expected);
CountsReport validate_counts(const DatasetSplit& split, const Table1Row& expected);

}  // namespace fusionette
