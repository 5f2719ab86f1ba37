#include "fusionette/label_map.hpp"

#include <algorithm>
#include <cctype>

#include "fusionette/error.hpp"

namespace fusionette {

namespace {

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    out.push_back(c == ' ' || c == '-' ? '_' : static_cast<char>(std::tolower(c)));
  }
  // Trim surrounding separators left over from padded annotation cells.
  const auto first = out.find_first_not_of('_');
  if (first == std::string::npos) return {};
  const auto last = out.find_last_not_of('_');
  return out.substr(first, last - first + 1);
}

}  // namespace

LabelMap LabelMap::for_task(int task_id) {
  LabelMap m;
  m.task_id_ = task_id;
  switch (task_id) {
    case 1:
      m.class_names_ = {"informative", "not_informative"};
      m.entries_ = {{"informative", 0}, {"not_informative", 1}};
      break;
    case 2:
      m.class_names_ = {"infrastructure_and_utility_damage", "vehicle_damage",
                        "rescue_volunteering_or_donation_effort",
                        "affected_individuals", "other"};
      m.entries_ = {
          {"infrastructure_and_utility_damage", 0},
          {"vehicle_damage", 1},
          {"rescue_volunteering_or_donation_effort", 2},
          // Three sparse person-related categories share one class.
          {"affected_individuals", 3},
          {"injured_or_dead_people", 3},
          {"missing_or_found_people", 3},
          {"other_relevant_information", 4},
          {"not_humanitarian", 4},
      };
      break;
    case 3:
      m.class_names_ = {"severe_damage", "mild_damage", "little_or_no_damage"};
      m.entries_ = {{"severe_damage", 0}, {"mild_damage", 1}, {"little_or_no_damage", 2}};
      break;
    default:
      throw InvalidArgument("no label map for task " + std::to_string(task_id));
  }
  return m;
}

bool LabelMap::contains(std::string_view raw_category) const {
  const auto key = normalize(raw_category);
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == key; });
}

std::size_t LabelMap::index_of(std::string_view raw_category) const {
  const auto key = normalize(raw_category);
  for (const auto& [name, index] : entries_) {
    if (name == key) return index;
  }
  throw InvalidArgument("task " + std::to_string(task_id_) + ": unknown category '" +
                        std::string(raw_category) + "'");
}

std::vector<std::string> LabelMap::raw_categories() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

DatasetSplit apply_label_map(const std::vector<RawRecord>& rows, const LabelMap& map,
                             SplitName split) {
  DatasetSplit out;
  out.task_id = static_cast<std::uint8_t>(map.task_id());
  out.split = split;
  out.num_classes = map.num_classes();
  out.class_names = map.class_names();
  if (!rows.empty()) {
    out.dim_image = rows.front().f_i.size();
    out.dim_text = rows.front().f_t.size();
  }
  out.records.reserve(rows.size());
  for (const auto& row : rows) {
    out.records.push_back({row.id, row.f_i, row.f_t, map.index_of(row.category)});
  }
  return out;
}

std::uint64_t Table1Row::count(SplitName s) const {
  switch (s) {
    case SplitName::Train: return train;
    case SplitName::Validation: return validation;
    case SplitName::Test: return test;
  }
  return 0;
}

Table1Row table1_row(int task_id) {
  switch (task_id) {
    case 1: return {1, 9599, 1573, 1534};
    case 2: return {2, 2874, 477, 451};
    case 3: return {3, 2468, 529, 529};
    default:
      throw InvalidArgument("no published split sizes for task " + std::to_string(task_id));
  }
}

CountsReport validate_counts(std::span<const SplitCount> observed,
                             const Table1Row& expected) {
  CountsReport report;
  report.task_id = expected.task_id;
  report.expected_total = expected.total();
  report.pass = true;
  bool seen[3] = {false, false, false};
  for (const auto& obs : observed) {
    CountCheck c;
    c.split = obs.split;
    c.expected = expected.count(obs.split);
    c.actual = obs.count;
    c.delta = static_cast<std::int64_t>(c.actual) - static_cast<std::int64_t>(c.expected);
    c.pass = c.delta == 0;
    report.pass = report.pass && c.pass;
    report.actual_total += obs.count;
    seen[static_cast<int>(obs.split)] = true;
    report.checks.push_back(c);
  }
  if (seen[0] && seen[1] && seen[2]) {
    report.pass = report.pass && report.actual_total == report.expected_total;
  }
  return report;
}

CountsReport validate_counts(const DatasetSplit& split, const Table1Row& expected) {
  const SplitCount obs{split.split, split.records.size()};
  return validate_counts(std::span<const SplitCount>(&obs, 1), expected);
}

}  // namespace fusionette
