#include "swinit/eventstream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "swinit/rng.hpp"

namespace swinit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

double parse_real(std::string_view field, std::size_t row) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError("non-numeric field '" + std::string(field) + "'", row);
  if (!std::isfinite(v)) throw ParseError("non-finite field '" + std::string(field) + "'", row);
  return v;
}

std::int64_t parse_id(std::string_view field, std::size_t row) {
  field = trim(field);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec == std::errc() && ptr == field.data() + field.size() && !field.empty()) return v;
  // Some exports write ids as reals ("12.0").
  const double r = parse_real(field, row);
  if (r != std::floor(r)) throw ParseError("non-integer id '" + std::string(field) + "'", row);
  return static_cast<std::int64_t>(r);
}

struct RawRow {
  std::int64_t user, item;
  Event ev;
};

}  // namespace

Matrix EventLog::feature_matrix() const {
  Matrix X(static_cast<Index>(events.size()), static_cast<Index>(d));
  for (std::size_t i = 0; i < events.size(); ++i)
    for (std::int64_t j = 0; j < d; ++j) X(static_cast<Index>(i), j) = events[i].features[static_cast<std::size_t>(j)];
  return X;
}

EventLog parse_jodie_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  std::vector<RawRow> rows;
  std::int64_t d = -1;
  std::vector<std::string_view> fields;

  while (std::getline(in, line)) {
    ++row;
    const std::string_view text = trim(line);
    if (!have_header) {
      if (text.empty()) throw ParseError("missing header line", row);
      have_header = true;
      continue;
    }
    if (text.empty()) continue;

    fields.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = text.find(',', start);
      fields.push_back(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 4) throw ParseError("expected at least 4 fields, found " + std::to_string(fields.size()), row);
    const auto nf = static_cast<std::int64_t>(fields.size()) - 4;
    if (d < 0) d = nf;
    if (nf != d) throw ParseError("inconsistent feature dimension (" + std::to_string(nf) + " vs " + std::to_string(d) + ")", row);

    RawRow r;
    r.user = parse_id(fields[0], row);
    r.item = parse_id(fields[1], row);
    r.ev.t = parse_real(fields[2], row);
    if (r.ev.t < 0.0) throw ParseError("negative timestamp", row);
    const double label = parse_real(fields[3], row);
    if (label != 0.0 && label != 1.0) throw ParseError("state_label must be 0 or 1", row);
    r.ev.state_label = static_cast<int>(label);
    r.ev.features.resize(static_cast<std::size_t>(nf));
    for (std::int64_t j = 0; j < nf; ++j) r.ev.features[static_cast<std::size_t>(j)] = parse_real(fields[static_cast<std::size_t>(4 + j)], row);
    rows.push_back(std::move(r));
  }
  if (in.bad()) throw ParseError("I/O failure", row);
  if (!have_header) throw ParseError("empty file", row);
  if (rows.empty()) throw ParseError("no events after header", row);

  std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.ev.t < b.ev.t; });

  EventLog log;
  log.d = d;
  std::unordered_map<std::int64_t, std::int64_t> users, items;
  log.events.reserve(rows.size());
  for (auto& r : rows) {
    auto [u, u_new] = users.try_emplace(r.user, static_cast<std::int64_t>(users.size()));
    auto [v, v_new] = items.try_emplace(r.item, static_cast<std::int64_t>(items.size()));
    r.ev.src = u->second;
    r.ev.dst = v->second;
    log.events.push_back(std::move(r.ev));
  }
  log.n_src = static_cast<std::int64_t>(users.size());
  log.n_dst = static_cast<std::int64_t>(items.size());
  return log;
}

EventLog parse_jodie_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return parse_jodie_csv(in);
}

void write_jodie_csv(std::ostream& out, const EventLog& log) {
  out << "user_id,item_id,timestamp,state_label,comma_separated_list_of_features\n";
  char buf[40];
  for (const auto& e : log.events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.t);
    out << e.src << ',' << e.dst << ',' << buf << ',' << e.state_label;
    for (double f : e.features) {
      std::snprintf(buf, sizeof buf, "%.17g", f);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_jodie_csv(const std::string& path, const EventLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_jodie_csv(out, log);
}

void validate(const EventLog& log) {
  if (log.events.empty()) throw std::invalid_argument("event log is empty");
  double prev = 0.0;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const auto& e = log.events[i];
    if (static_cast<std::int64_t>(e.features.size()) != log.d)
      throw std::invalid_argument("event " + std::to_string(i) + ": feature length differs from d");
    if (!(e.t >= 0.0)) throw std::invalid_argument("event " + std::to_string(i) + ": negative timestamp");
    if (i > 0 && e.t < prev) throw std::invalid_argument("event " + std::to_string(i) + ": timestamps decrease");
    if (e.state_label != 0 && e.state_label != 1) throw std::invalid_argument("event " + std::to_string(i) + ": bad state_label");
    if (e.src < 0 || e.src >= log.n_src || e.dst < 0 || e.dst >= log.n_dst)
      throw std::invalid_argument("event " + std::to_string(i) + ": node id out of range");
    prev = e.t;
  }
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac})
    if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("split fractions must lie in (0, 1)");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
  if (!(unseen_frac >= 0.0 && unseen_frac <= 1.0)) throw std::invalid_argument("unseen fraction must lie in [0, 1]");
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  // The epsilon keeps exact products such as 10 * 0.7 from flooring to 6.
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train_frac + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val_frac + 1e-9));
  const std::size_t train = std::min(n, n_train);
  const std::size_t val = std::min(n - train, n_val);
  return {train, val, n - train - val};
}

Split chronological_split(const EventLog& log, const SplitSpec& spec) {
  const auto sizes = split_sizes(log.size(), spec);
  if (sizes.train == 0 || sizes.val == 0 || sizes.test == 0)
    throw std::invalid_argument("chronological_split: a split would be empty for N=" + std::to_string(log.size()));

  auto slice = [&](std::size_t from, std::size_t to) {
    EventLog part;
    part.n_src = log.n_src;
    part.n_dst = log.n_dst;
    part.d = log.d;
    part.events.assign(log.events.begin() + static_cast<std::ptrdiff_t>(from),
                       log.events.begin() + static_cast<std::ptrdiff_t>(to));
    return part;
  };
  Split out;
  out.train = slice(0, sizes.train);
  out.val = slice(sizes.train, sizes.train + sizes.val);
  out.test = slice(sizes.train + sizes.val, log.size());
  if (!spec.inductive) return out;

  std::set<std::int64_t> later;
  for (const auto* part : {&out.val, &out.test})
    for (const auto& e : part->events) {
      later.insert(log.src_node(e));
      later.insert(log.dst_node(e));
    }
  std::vector<std::int64_t> pool(later.begin(), later.end());
  Rng rng(derive_seed(spec.seed, "split/unseen"));
  for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
  const auto n_unseen = static_cast<std::size_t>(std::llround(spec.unseen_frac * static_cast<double>(pool.size())));
  pool.resize(n_unseen);
  std::sort(pool.begin(), pool.end());
  const std::unordered_set<std::int64_t> unseen(pool.begin(), pool.end());

  std::erase_if(out.train.events, [&](const Event& e) {
    return unseen.contains(log.src_node(e)) || unseen.contains(log.dst_node(e));
  });
  out.unseen_nodes = std::move(pool);
  return out;
}

}  // namespace swinit
