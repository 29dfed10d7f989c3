#pragma once

// Critic-threshold filtering of teacher-generated tuples, precision/recall
// sweeps for picking thresholds, and the annotator-aggregation rule that turns
// three binarized ratings per dimension into a plan validity label.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stepplan {

enum class TupleKind { plan, condition, counterfactual };
enum class Decision { accepted, rejected, pending };

std::string_view to_string(TupleKind kind);
TupleKind tuple_kind_from_string(std::string_view text);
std::string_view to_string(Decision decision);

struct CurationRecord {
  std::string id;
  TupleKind tuple_kind = TupleKind::plan;
  nlohmann::json payload;  // (g, y), (g, y, c) or (g, y, c, y')
  std::optional<double> critic_score;
  std::optional<bool> gold_label;  // only needed for precision/recall sweeps
  Decision decision = Decision::pending;
  std::string diagnostic;
};

CurationRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CurationRecord& record);

struct ThresholdPolicy {
  double plan = 0.65;
  double condition = 0.76;
  double counterfactual = 0.82;

  double threshold(TupleKind kind) const;
  void validate() const;
};

struct Partition {
  std::vector<CurationRecord> accepted;
  std::vector<CurationRecord> rejected;
  std::vector<CurationRecord> pending;
};

/// accepted iff critic_score >= threshold of the record's kind; records
/// without a usable score are pending. Input order is kept within each part.
Partition curate(const std::vector<CurationRecord>& records, const ThresholdPolicy& policy);

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

struct PrPoint {
  double tau = 0.0;
  double precision = 0.0;  // NaN when nothing is accepted
  double recall = 0.0;     // NaN when there are no positives
  std::size_t accepted = 0;
};

/// accepted = {score >= tau}. Throws ValidationError for empty input.
std::vector<PrPoint> pr_curve(const std::vector<ScoredLabel>& scored, const std::vector<double>& thresholds);

/// Thresholds at every distinct score (ascending); together they reach every
/// operating point of the ">= tau" family.
std::vector<double> distinct_score_thresholds(const std::vector<ScoredLabel>& scored);

/// Tab-separated report with header "tau\tprecision\trecall\taccepted".
std::string pr_report(const std::vector<PrPoint>& curve);

enum class Dimension { achievability, topicality, ordering, completeness };
inline constexpr std::size_t kAnnotators = 3;

struct AnnotationBundle {
  /// ratings[dimension][annotator], each 0 or 1 after Likert binarization.
  std::array<std::array<int, kAnnotators>, 4> ratings{};

  double mean(Dimension d) const;
};

/// Maps a 5-point Likert answer to {0, 1}: "definitely", "mostly" and
/// "somewhat" count as valid, "hardly" and "not at all" as invalid.
int binarize_likert(std::string_view answer);

/// valid iff the mean rating exceeds 0.25 on achievability, topicality and
/// ordering, and is at least 0.65 on completeness.
bool aggregate_plan_validity(const AnnotationBundle& bundle);

}  // namespace stepplan
