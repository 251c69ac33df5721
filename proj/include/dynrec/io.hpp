#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/crc.hpp>

#include "dynrec/adaptive.hpp"
#include "dynrec/graph.hpp"
#include "dynrec/stream.hpp"

namespace dynrec::io {

// ---------------------------------------------------------------------------
// Dataset ingestion

enum class Format : std::uint8_t { RatingsTsv, PairsTsv };

/// Column positions of each field within a record (zero based).
struct FieldOrder {
  std::size_t user = 0;
  std::size_t item = 1;
  std::size_t rating = 2;     // ratings-tsv only
  std::size_t timestamp = 3;  // pairs-tsv default is 2, see for_format()

  static FieldOrder for_format(Format f) {
    return f == Format::RatingsTsv ? FieldOrder{0, 1, 2, 3} : FieldOrder{0, 1, 0, 2};
  }

  /// Parses "user,item,rating,timestamp" in any order.
  static FieldOrder parse(std::string_view spec, Format f) {
    FieldOrder out{};
    bool seen_user = false, seen_item = false, seen_rating = false, seen_ts = false;
    std::size_t pos = 0, index = 0;
    while (pos <= spec.size()) {
      const auto comma = spec.find(',', pos);
      const auto name = spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      if (name == "user") out.user = index, seen_user = true;
      else if (name == "item") out.item = index, seen_item = true;
      else if (name == "rating") out.rating = index, seen_rating = true;
      else if (name == "timestamp") out.timestamp = index, seen_ts = true;
      else if (name != "_" && !name.empty()) throw ConfigError("unknown field name '" + std::string(name) + "'");
      ++index;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!seen_user || !seen_item || !seen_ts || (f == Format::RatingsTsv && !seen_rating)) {
      throw ConfigError("field order must name user, item, timestamp" +
                        std::string(f == Format::RatingsTsv ? " and rating" : ""));
    }
    return out;
  }
};

struct DatasetSpec {
  std::string path;
  Format format = Format::RatingsTsv;
  int rating_threshold = 2;  // keep ratings strictly above
  FieldOrder fields = FieldOrder::for_format(Format::RatingsTsv);
  char delimiter = '\t';
  std::size_t skip_lines = 0;
};

inline Format parse_format(const std::string& s) {
  if (s == "ratings-tsv") return Format::RatingsTsv;
  if (s == "pairs-tsv") return Format::PairsTsv;
  throw ConfigError("unknown dataset format '" + s + "'");
}

namespace detail {

template <class T>
T parse_integer(std::string_view field, const char* what, std::size_t line) {
  T v{};
  const auto* end = field.data() + field.size();
  const auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || p != end) throw ParseError(std::string("non-integer ") + what + " '" + std::string(field) + "'", line);
  return v;
}

}  // namespace detail

/// Binary add events from a rating log read from `in`.
/// Keeps one event per (user, item) pair with the earliest timestamp and
/// returns them sorted by (timestamp, input order).
inline std::vector<EdgeEvent> parse_ratings(std::istream& in, const DatasetSpec& spec) {
  struct Record {
    EdgeEvent event;
    std::size_t order;
  };
  std::vector<Record> kept;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  const auto& f = spec.fields;
  const std::size_t need =
      std::max({f.user, f.item, f.timestamp, spec.format == Format::RatingsTsv ? f.rating : std::size_t{0}}) + 1;

  std::string line;
  std::vector<std::string_view> cols;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no <= spec.skip_lines) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    cols.clear();
    std::string_view rest(line);
    while (true) {
      const auto d = rest.find(spec.delimiter);
      cols.push_back(rest.substr(0, d));
      if (d == std::string_view::npos) break;
      rest.remove_prefix(d + 1);
    }
    if (cols.size() < need) {
      throw ParseError("expected at least " + std::to_string(need) + " fields, got " + std::to_string(cols.size()), line_no);
    }
    if (cols[f.user].empty() || cols[f.item].empty()) throw ParseError("empty user or item field", line_no);
    if (spec.format == Format::RatingsTsv) {
      const int rating = detail::parse_integer<int>(cols[f.rating], "rating", line_no);
      if (rating <= spec.rating_threshold) continue;
    }
    const auto ts = detail::parse_integer<Timestamp>(cols[f.timestamp], "timestamp", line_no);
    EdgeEvent ev{std::string(cols[f.user]), std::string(cols[f.item]), ts, EdgeOp::Add};
    auto key = std::make_pair(ev.user, ev.item);
    if (auto it = index.find(key); it != index.end()) {
      auto& prior = kept[it->second];
      if (ts < prior.event.timestamp) prior = Record{std::move(ev), line_no};
      continue;
    }
    index.emplace(std::move(key), kept.size());
    kept.push_back(Record{std::move(ev), line_no});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Record& a, const Record& b) {
    if (a.event.timestamp != b.event.timestamp) return a.event.timestamp < b.event.timestamp;
    return a.order < b.order;
  });
  std::vector<EdgeEvent> out;
  out.reserve(kept.size());
  for (auto& r : kept) out.push_back(std::move(r.event));
  return out;
}

inline std::vector<EdgeEvent> parse_ratings(const DatasetSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) throw ParseError("cannot open dataset '" + spec.path + "'", 0);
  return parse_ratings(in, spec);
}

struct IngestStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t edges = 0;
  double avg_item_degree = 0.0;
};

inline IngestStats ingest_stats(const std::vector<EdgeEvent>& events) {
  IdRegistry<UserId> users;
  IdRegistry<ItemId> items;
  for (const auto& e : events) {
    users.intern(e.user);
    items.intern(e.item);
  }
  IngestStats s{users.size(), items.size(), events.size(), 0.0};
  if (s.items > 0) s.avg_item_degree = static_cast<double>(s.edges) / static_cast<double>(s.items);
  return s;
}

// ---------------------------------------------------------------------------
// Report CSV

inline std::string report_header(const std::vector<std::size_t>& ks) {
  std::string h = "edges_fed,algorithm,auc";
  for (auto k : ks) h += ",precision@" + std::to_string(k);
  for (auto k : ks) h += ",recall@" + std::to_string(k);
  h += ",users_evaluated,us_per_event";
  return h;
}

inline void write_report(std::ostream& out, const std::vector<CheckpointReport>& reports,
                         const std::vector<std::size_t>& ks) {
  out << report_header(ks) << '\n';
  std::ostringstream row;
  row << std::setprecision(12);
  for (const auto& rep : reports) {
    for (const auto& m : rep.results) {
      row.str("");
      row << rep.edges_fed << ',' << to_string(m.algorithm) << ',' << m.auc;
      for (double p : m.precision) row << ',' << p;
      for (double r : m.recall) row << ',' << r;
      row << ',' << m.users_evaluated << ',' << m.us_per_event;
      out << row.str() << '\n';
    }
  }
}

inline void write_report(const std::vector<CheckpointReport>& reports, const std::vector<std::size_t>& ks,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write report '" + path + "'");
  write_report(out, reports, ks);
}

// ---------------------------------------------------------------------------
// Snapshots
//
// Layout: magic "DYNRSNAP", u32 version, u64 payload length, payload,
// u32 CRC-32 of the payload. All integers little endian.

inline constexpr char kSnapshotMagic[8] = {'D', 'Y', 'N', 'R', 'S', 'N', 'A', 'P'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  std::uint32_t version = kSnapshotVersion;
  std::uint64_t config_digest = 0;
  EngineState state;
};

/// CRC-32 over a canonical rendering of the run parameters and input
/// streams; a snapshot only resumes the run it was taken from.
inline std::uint64_t config_digest(const StreamConfig& cfg, const std::vector<EdgeEvent>& train,
                                   const std::vector<EdgeEvent>& test) {
  boost::crc_32_type crc;
  auto feed = [&](std::string_view s) {
    crc.process_bytes(s.data(), s.size());
    crc.process_byte(0);
  };
  for (auto a : cfg.algorithms) feed(to_string(a));
  feed(std::to_string(cfg.checkpoint_interval));
  feed(std::to_string(cfg.start_threshold));
  for (auto k : cfg.ks) feed(std::to_string(k));
  feed(cfg.warm_start == WarmStart::ExactInit ? "exact-init" : "replay");
  feed(std::to_string(cfg.seed));
  feed(cfg.hybrid_lambda ? std::to_string(*cfg.hybrid_lambda) : "-");
  for (const auto* stream : {&train, &test}) {
    feed(std::to_string(stream->size()));
    for (const auto& e : *stream) {
      feed(e.user);
      feed(e.item);
      feed(std::to_string(e.timestamp));
      feed(e.op == EdgeOp::Add ? "+" : "-");
    }
  }
  return crc.checksum();
}

namespace detail {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void str(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  double f64() {
    const auto bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t count(std::size_t element_bytes) {
    const auto n = u64();
    if (element_bytes > 0 && n > (data_.size() - pos_) / element_bytes) throw SnapshotError("snapshot truncated");
    return static_cast<std::size_t>(n);
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw SnapshotError("snapshot truncated");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::string encode_payload(const Snapshot& snap) {
  Writer w;
  w.u64(snap.config_digest);
  const auto& st = snap.state;
  const auto& g = st.graph;
  w.u64(g.user_count());
  for (const auto& l : g.users().labels()) w.str(l);
  w.u64(g.item_count());
  for (const auto& l : g.items().labels()) w.str(l);
  for (std::size_t u = 0; u < g.user_count(); ++u) {
    const auto items = g.items_of(UserId{u});
    w.u64(items.size());
    for (ItemId it : items) w.u32(it.value);
  }
  w.u64(static_cast<std::uint64_t>(g.latest_timestamp()));
  w.u64(st.position);
  w.u64(st.next_checkpoint);
  w.u8(st.warm_done ? 1 : 0);
  w.u64(st.stores.size());
  for (const auto& s : st.stores) {
    w.u8(static_cast<std::uint8_t>(s.approximation()));
    w.u64(s.column_count());
    w.u64(s.events_applied());
    w.u64(s.value_writes());
    const auto entries = s.sorted_entries();
    w.u64(entries.size());
    for (const auto& [c, r, v] : entries) {
      w.u32(c);
      w.u32(r);
      w.f64(v);
    }
  }
  return w.bytes();
}

inline Snapshot decode_payload(std::string_view payload, std::uint32_t version) {
  Reader r(payload);
  Snapshot snap;
  snap.version = version;
  snap.config_digest = r.u64();
  std::vector<std::string> users(r.count(8));
  for (auto& l : users) l = r.str();
  std::vector<std::string> items(r.count(8));
  for (auto& l : items) l = r.str();
  std::vector<std::vector<ItemId>> adjacency(users.size());
  for (auto& list : adjacency) {
    list.resize(r.count(4));
    for (auto& it : list) it = ItemId{r.u32()};
  }
  const auto latest = static_cast<Timestamp>(r.u64());
  try {
    snap.state.graph = BipartiteGraph::from_parts(users, items, adjacency, latest);
  } catch (const Error& e) {
    throw SnapshotError(std::string("corrupt graph section: ") + e.what());
  }
  snap.state.position = r.u64();
  snap.state.next_checkpoint = r.u64();
  snap.state.warm_done = r.u8() != 0;
  const auto n_stores = r.count(1);
  for (std::size_t i = 0; i < n_stores; ++i) {
    const auto tag = r.u8();
    if (tag != 1 && tag != 2) throw SnapshotError("unknown store tag");
    const auto columns = r.u64();
    const auto events = r.u64();
    const auto writes = r.u64();
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> entries(r.count(16));
    for (auto& [c, row, v] : entries) {
      c = r.u32();
      row = r.u32();
      v = r.f64();
    }
    snap.state.stores.push_back(
        SparseColumnStore::from_entries(static_cast<Approximation>(tag), columns, entries, events, writes));
  }
  if (!r.at_end()) throw SnapshotError("trailing bytes in snapshot payload");
  return snap;
}

}  // namespace detail

inline void save_snapshot(const Snapshot& snap, std::ostream& out) {
  const auto payload = detail::encode_payload(snap);
  boost::crc_32_type crc;
  crc.process_bytes(payload.data(), payload.size());
  detail::Writer head;
  head.u32(snap.version);
  head.u64(payload.size());
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  out.write(head.bytes().data(), static_cast<std::streamsize>(head.bytes().size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  detail::Writer tail;
  tail.u32(crc.checksum());
  out.write(tail.bytes().data(), 4);
  if (!out) throw SnapshotError("snapshot write failed");
}

inline void save_snapshot(const Snapshot& snap, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SnapshotError("cannot write snapshot '" + path + "'");
  save_snapshot(snap, out);
}

inline Snapshot load_snapshot(std::istream& in) {
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < sizeof kSnapshotMagic + 12 || std::memcmp(data.data(), kSnapshotMagic, sizeof kSnapshotMagic) != 0) {
    throw SnapshotError("not a snapshot file");
  }
  detail::Reader head(std::string_view(data).substr(sizeof kSnapshotMagic, 12));
  const auto version = head.u32();
  if (version != kSnapshotVersion) {
    throw SnapshotError("snapshot version " + std::to_string(version) + " does not match supported version " +
                        std::to_string(kSnapshotVersion));
  }
  const auto length = head.u64();
  const std::size_t start = sizeof kSnapshotMagic + 12;
  if (data.size() - start < 4 || length != data.size() - start - 4) throw SnapshotError("snapshot truncated");
  const std::string_view payload(data.data() + start, length);
  boost::crc_32_type crc;
  crc.process_bytes(payload.data(), payload.size());
  detail::Reader tail(std::string_view(data).substr(start + length, 4));
  if (tail.u32() != crc.checksum()) throw SnapshotError("snapshot checksum mismatch");
  return detail::decode_payload(payload, version);
}

inline Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open snapshot '" + path + "'");
  return load_snapshot(in);
}

}  // namespace dynrec::io
