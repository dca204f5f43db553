#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "swinit/linalg.hpp"

namespace swinit {

/// One timestamped interaction. `src` indexes the user side, `dst` the item
/// side; both are dense 0-based ids within their own side.
struct Event {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  double t = 0.0;
  std::vector<double> features;
  int state_label = 0;

  bool operator==(const Event&) const = default;
};

/// Chronologically ordered event stream over a bipartite node set.
///
/// In the shared id space used for graph construction users occupy
/// [0, n_src) and items [n_src, n_src + n_dst).
struct EventLog {
  std::vector<Event> events;
  std::int64_t n_src = 0;
  std::int64_t n_dst = 0;
  std::int64_t d = 0;

  std::size_t size() const { return events.size(); }
  std::int64_t num_nodes() const { return n_src + n_dst; }
  std::int64_t src_node(const Event& e) const { return e.src; }
  std::int64_t dst_node(const Event& e) const { return n_src + e.dst; }

  /// Stacks event features row-wise into an N x d matrix.
  Matrix feature_matrix() const;

  bool operator==(const EventLog&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : std::runtime_error(what + " at row " + std::to_string(row)), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Parses a JODIE-format CSV: a header line, then
/// `user_id,item_id,timestamp,state_label,f_1,...,f_d`. Ids are remapped per
/// side in order of first appearance after a stable sort by timestamp.
EventLog parse_jodie_csv(const std::string& path);
EventLog parse_jodie_csv(std::istream& in);

/// Writes a log back out in the same format (remapped ids, %.17g reals).
void write_jodie_csv(std::ostream& out, const EventLog& log);
void write_jodie_csv(const std::string& path, const EventLog& log);

/// Throws std::invalid_argument if any EventLog invariant is violated.
void validate(const EventLog& log);

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  bool inductive = false;
  double unseen_frac = 0.10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  EventLog train;
  EventLog val;
  EventLog test;
  std::vector<std::int64_t> unseen_nodes;  // shared id space, sorted
};

/// Chronological prefix / middle / suffix split by event index: floor for
/// train and val, remainder to test. With `inductive`, a seeded fraction of
/// the nodes seen in val or test is marked unseen and every training event
/// touching one of them is dropped.
Split chronological_split(const EventLog& log, const SplitSpec& spec);

/// Sizes (train, val, test) that chronological_split would produce before
/// inductive filtering.
struct SplitSizes {
  std::size_t train, val, test;
};
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

}  // namespace swinit
