#include "grouser/telemetry.hpp"

#include <boost/crc.hpp>
#include <fstream>
#include <limits>
#include <string>

#include "grouser/config.hpp"

namespace grouser {

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) noexcept {
  // poly 0x1021, init 0xFFFF, no reflection, no final xor
  boost::crc_ccitt_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

namespace {

template <class T>
void put_le(std::uint8_t* p, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(u >> (8 * i));
}

template <class T>
T get_le(const std::uint8_t* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return static_cast<T>(u);
}

bool fits_i32(std::int64_t v) {
  return v >= std::numeric_limits<std::int32_t>::min() && v <= std::numeric_limits<std::int32_t>::max();
}

}  // namespace

WireFrame encode_frame(const SensorFrame& f) {
  GROUSER_REQUIRE(f.cam_counts <= 4095, ErrorCode::Encode, "cam counts exceed 12 bits");
  GROUSER_REQUIRE(fits_i32(f.motor_counts), ErrorCode::Encode, "motor counts exceed int32");
  GROUSER_REQUIRE(fits_i32(f.linear_counts), ErrorCode::Encode, "linear counts exceed int32");
  GROUSER_REQUIRE(f.current_mA <= 0xFFFF, ErrorCode::Encode, "current exceeds 65535 mA");
  WireFrame w{};
  w[0] = kSyncByte0;
  w[1] = kSyncByte1;
  w[2] = kWireVersion;
  put_le<std::uint64_t>(&w[3], f.t_us);
  put_le<std::int32_t>(&w[11], static_cast<std::int32_t>(f.motor_counts));
  put_le<std::uint16_t>(&w[15], f.cam_counts);
  put_le<std::int32_t>(&w[17], static_cast<std::int32_t>(f.linear_counts));
  put_le<std::uint16_t>(&w[21], static_cast<std::uint16_t>(f.current_mA));
  w[23] = f.flags;
  put_le<std::uint16_t>(&w[24], crc16_ccitt_false(std::span(w).first(24)));
  return w;
}

SensorFrame decode_frame(std::span<const std::uint8_t> b) {
  GROUSER_REQUIRE(b.size() == kWireFrameSize, ErrorCode::Sync,
                  "frame must be " + std::to_string(kWireFrameSize) + " bytes, got " + std::to_string(b.size()));
  GROUSER_REQUIRE(b[0] == kSyncByte0 && b[1] == kSyncByte1, ErrorCode::Sync, "missing sync marker");
  GROUSER_REQUIRE(get_le<std::uint16_t>(&b[24]) == crc16_ccitt_false(b.first(24)), ErrorCode::Corrupt,
                  "frame checksum mismatch");
  GROUSER_REQUIRE(b[2] == kWireVersion, ErrorCode::Version, "unknown frame version " + std::to_string(b[2]));
  SensorFrame f;
  f.t_us = get_le<std::uint64_t>(&b[3]);
  f.motor_counts = get_le<std::int32_t>(&b[11]);
  f.cam_counts = get_le<std::uint16_t>(&b[15]);
  f.linear_counts = get_le<std::int32_t>(&b[17]);
  f.current_mA = get_le<std::uint16_t>(&b[21]);
  f.flags = b[23];
  GROUSER_REQUIRE(f.cam_counts <= 4095, ErrorCode::Range, "cam counts exceed 12 bits");
  return f;
}

void FrameStreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<DecodeEvent> FrameStreamDecoder::next() {
  // Skip to the next candidate sync.
  while (!buffer_.empty()) {
    if (buffer_[0] == kSyncByte0 && (buffer_.size() < 2 || buffer_[1] == kSyncByte1)) break;
    buffer_.pop_front();
    ++consumed_;
  }
  if (buffer_.size() < kWireFrameSize) return std::nullopt;

  WireFrame w;
  std::copy_n(buffer_.begin(), kWireFrameSize, w.begin());
  DecodeEvent ev;
  ev.offset = consumed_;
  try {
    ev.frame = decode_frame(w);
    buffer_.erase(buffer_.begin(), buffer_.begin() + kWireFrameSize);
    consumed_ += kWireFrameSize;
  } catch (const Error& e) {
    ev.error = e.code();
    buffer_.pop_front();
    ++consumed_;
  }
  return ev;
}

std::optional<DecodeEvent> FrameStreamDecoder::finish() {
  if (auto ev = next()) return ev;
  if (buffer_.empty()) return std::nullopt;
  DecodeEvent ev;
  ev.offset = consumed_;
  ev.error = ErrorCode::Sync;
  consumed_ += buffer_.size();
  buffer_.clear();
  return ev;
}

std::vector<DecodeEvent> decode_stream(std::span<const std::uint8_t> bytes) {
  FrameStreamDecoder d;
  d.feed(bytes);
  std::vector<DecodeEvent> out;
  while (auto ev = d.next()) out.push_back(*ev);
  while (auto ev = d.finish()) out.push_back(*ev);
  return out;
}

namespace {

Json frame_json(const SensorFrame& f) {
  return {{"record", "frame"},          {"t_us", f.t_us},   {"motor", f.motor_counts}, {"cam", f.cam_counts},
          {"linear", f.linear_counts},  {"current_mA", f.current_mA}, {"flags", f.flags}};
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(); }

std::optional<double> opt_double(const Json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

}  // namespace

void write_trial_log(const TrialRecord& record, std::ostream& out) {
  out << Json{{"record", "header"}, {"schema", kTrialLogSchema}, {"config", to_json(record.config)}}.dump() << '\n';
  for (const auto& f : record.frames) out << frame_json(f).dump() << '\n';
  Json summary{{"record", "summary"},
               {"outcome", to_string(record.outcome)},
               {"frame_count", record.frames.size()},
               {"true_slip_mean", record.true_slip_mean}};
  if (record.metrics) {
    const auto& m = *record.metrics;
    summary["metrics"] = {{"slip_est", m.slip_est},
                          {"energy_J", opt_json(m.energy_J)},
                          {"energy_composite", m.energy_composite},
                          {"travel_time_s", opt_json(m.travel_time_s)}};
  } else {
    summary["metrics"] = nullptr;
  }
  out << summary.dump() << '\n';
  GROUSER_REQUIRE(out.good(), ErrorCode::Io, "trial log write failed");
}

void write_trial_log(const TrialRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  GROUSER_REQUIRE(out.good(), ErrorCode::Io, "cannot open trial log '" + path.string() + "' for writing");
  try {
    write_trial_log(record, out);
  } catch (const Error& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

TrialRecord read_trial_log(std::istream& in) {
  TrialRecord rec;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool have_summary = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "trial log line " + std::to_string(line_no);
    GROUSER_REQUIRE(!have_summary, ErrorCode::Data, where + ": content after summary");
    Json j;
    try {
      j = Json::parse(line);
      const auto kind = j.at("record").get<std::string>();
      if (kind == "header") {
        GROUSER_REQUIRE(!have_header, ErrorCode::Data, where + ": duplicate header");
        const int schema = j.at("schema").get<int>();
        GROUSER_REQUIRE(schema == kTrialLogSchema, ErrorCode::Version,
                        where + ": unsupported log schema " + std::to_string(schema));
        rec.config = sim_config_from_json(j.at("config"));
        have_header = true;
      } else if (kind == "frame") {
        GROUSER_REQUIRE(have_header, ErrorCode::Data, where + ": frame before header");
        SensorFrame f;
        f.t_us = j.at("t_us").get<std::uint64_t>();
        f.motor_counts = j.at("motor").get<std::int64_t>();
        f.cam_counts = j.at("cam").get<std::uint16_t>();
        f.linear_counts = j.at("linear").get<std::int64_t>();
        f.current_mA = j.at("current_mA").get<std::uint32_t>();
        f.flags = j.at("flags").get<std::uint8_t>();
        rec.frames.push_back(f);
      } else if (kind == "summary") {
        GROUSER_REQUIRE(have_header, ErrorCode::Data, where + ": summary before header");
        rec.outcome = trial_outcome_from_string(j.at("outcome").get<std::string>());
        rec.true_slip_mean = j.at("true_slip_mean").get<double>();
        GROUSER_REQUIRE(j.at("frame_count").get<std::size_t>() == rec.frames.size(), ErrorCode::Data,
                        where + ": frame count mismatch");
        const Json& m = j.at("metrics");
        if (!m.is_null()) {
          TrialMetrics tm;
          tm.slip_est = m.at("slip_est").get<double>();
          tm.energy_J = opt_double(m.at("energy_J"));
          tm.energy_composite = m.at("energy_composite").get<bool>();
          tm.travel_time_s = opt_double(m.at("travel_time_s"));
          rec.metrics = tm;
        }
        have_summary = true;
      } else {
        throw Error(ErrorCode::Data, where + ": unknown record '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Data, where + ": " + e.what());
    }
  }
  GROUSER_REQUIRE(have_header && have_summary, ErrorCode::Data, "trial log is missing its header or summary");
  return rec;
}

TrialRecord read_trial_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  GROUSER_REQUIRE(in.good(), ErrorCode::Io, "cannot open trial log '" + path.string() + "'");
  return read_trial_log(in);
}

}  // namespace grouser
