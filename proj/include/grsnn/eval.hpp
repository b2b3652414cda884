#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

#include "grsnn/errors.hpp"
#include "grsnn/graph.hpp"
#include "grsnn/rng.hpp"

namespace grsnn {

// Tie-averaged rank of one query triplet within its filtered candidate
// list; direction tells which endpoint was corrupted.
struct RankRecord {
  Triplet query;
  double rank = 1.0;
  bool head_side = false;
};

using TripletSet = std::unordered_set<Triplet, TripletHash>;

inline TripletSet known_triplet_set(const Split& split) {
  TripletSet known;
  for (const auto& t : split.graph.edges) known.insert(t);
  for (const auto& t : split.train) known.insert(t);
  for (const auto& t : split.valid) known.insert(t);
  for (const auto& t : split.test) known.insert(t);
  if (split.inductive)
    for (const auto& t : split.eval_graph.edges) known.insert(t);
  return known;
}

// Tie-averaged position of `true_score` among candidate scores (descending;
// the true triplet itself is part of the list).
inline double tie_averaged_rank(double true_score, const std::vector<double>& others) {
  std::size_t better = 0, ties = 0;
  for (double s : others) {
    if (s > true_score) ++better;
    else if (s == true_score) ++ties;
  }
  return static_cast<double>(better) + (static_cast<double>(ties) + 2.0) / 2.0;
}

// Rank (x, q, y) against all single-endpoint corruptions not known to be
// true. score_tail(candidate) scores (x, q, candidate); score_head scores
// (candidate, q, y). Returns tail-side then head-side record.
inline std::pair<RankRecord, RankRecord> filtered_rank(
    const std::function<double(std::size_t)>& score_tail,
    const std::function<double(std::size_t)>& score_head, const Triplet& query,
    std::size_t num_entities, const TripletSet& known) {
  std::vector<double> tail_scores, head_scores;
  tail_scores.reserve(num_entities);
  head_scores.reserve(num_entities);
  for (std::size_t e = 0; e < num_entities; ++e) {
    if (e != query.tail && !known.count({query.head, query.relation, e}))
      tail_scores.push_back(score_tail(e));
    if (e != query.head && !known.count({e, query.relation, query.tail}))
      head_scores.push_back(score_head(e));
  }
  RankRecord tail_rec{query, tie_averaged_rank(score_tail(query.tail), tail_scores), false};
  RankRecord head_rec{query, tie_averaged_rank(score_head(query.head), head_scores), true};
  return {tail_rec, head_rec};
}

// Inductive protocol: the true triplet against `num_negatives` uniformly
// drawn corruptions that do not form known triplets.
inline RankRecord sampled_rank(const std::function<double(std::size_t)>& score_tail,
                               const Triplet& query, std::size_t num_entities,
                               const TripletSet& known, std::size_t num_negatives, Rng& rng,
                               bool head_side = false,
                               const std::function<double(std::size_t)>& score_head = {}) {
  std::vector<double> scores;
  scores.reserve(num_negatives);
  std::size_t guard = 0;
  while (scores.size() < num_negatives && guard < num_negatives * 1000) {
    ++guard;
    const std::size_t e = rng.uniform_int(num_entities);
    if (head_side) {
      if (e == query.head || known.count({e, query.relation, query.tail})) continue;
      scores.push_back(score_head(e));
    } else {
      if (e == query.tail || known.count({query.head, query.relation, e})) continue;
      scores.push_back(score_tail(e));
    }
  }
  const double true_score = head_side ? score_head(query.head) : score_tail(query.tail);
  return {query, tie_averaged_rank(true_score, scores), head_side};
}

struct RankingMetrics {
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t count = 0;
};

inline RankingMetrics ranking_metrics(const std::vector<RankRecord>& records) {
  RankingMetrics m;
  if (records.empty()) return m;
  for (const auto& r : records) {
    m.mr += r.rank;
    m.mrr += 1.0 / r.rank;
    m.hits1 += r.rank <= 1.0 ? 1.0 : 0.0;
    m.hits3 += r.rank <= 3.0 ? 1.0 : 0.0;
    m.hits10 += r.rank <= 10.0 ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(records.size());
  m.mr /= n;
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  m.count = records.size();
  return m;
}

// AUROC: probability that a random positive outranks a random negative,
// ties counting one half. AP: precision averaged at each positive along the
// descending-score sweep (ties resolved by input order, positives first
// within equal scores would bias, so the sweep uses stable order over the
// concatenated list as given).
inline std::pair<double, double> auroc_ap(const std::vector<double>& pos_scores,
                                          const std::vector<double>& neg_scores) {
  if (pos_scores.empty() || neg_scores.empty())
    throw ContractError("auroc_ap: need both positives and negatives");

  // AUROC via sorted sweep with tie groups
  struct Item {
    double score;
    bool positive;
    std::size_t index;
  };
  std::vector<Item> items;
  items.reserve(pos_scores.size() + neg_scores.size());
  for (std::size_t i = 0; i < pos_scores.size(); ++i) items.push_back({pos_scores[i], true, i});
  for (std::size_t i = 0; i < neg_scores.size(); ++i)
    items.push_back({neg_scores[i], false, pos_scores.size() + i});
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.score > b.score;
  });

  double pairs = 0.0;
  double pos_seen = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    std::size_t tie_pos = 0, tie_neg = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      if (items[j].positive) ++tie_pos;
      else ++tie_neg;
      ++j;
    }
    // negatives in this group sit below every positive already passed
    pairs += static_cast<double>(tie_neg) * pos_seen;
    pairs += 0.5 * static_cast<double>(tie_pos) * static_cast<double>(tie_neg);
    pos_seen += static_cast<double>(tie_pos);
    i = j;
  }
  const double auroc =
      pairs / (static_cast<double>(pos_scores.size()) * static_cast<double>(neg_scores.size()));

  double ap = 0.0;
  double tp = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (!items[k].positive) continue;
    tp += 1.0;
    ap += tp / static_cast<double>(k + 1);
  }
  ap /= static_cast<double>(pos_scores.size());
  return {auroc, ap};
}

}  // namespace grsnn
