/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The evframe Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Readers/writers for every on-disk artifact:
//   events       CSV, header "t,x,y,p", one event per row
//   images       binary PNM, P5 (gray) or P6 (RGB), maxval 255
//   tensors      "FTNS" | u32 rank | u32 dims[rank] | f32 payload, all little-endian
//   calibration  JSON with "K_rgb","K_event","R_rgb","R_event","R_event_rgb" (9 row-major numbers each)
//   detections   JSON lines {image_id, category_id, bbox:[x,y,w,h], score?}
//   bundles      JSON manifest {name: relative path of a tensor file}

#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "evframe/detection.hpp"
#include "evframe/errors.hpp"
#include "evframe/events.hpp"
#include "evframe/geometry.hpp"
#include "evframe/image.hpp"
#include "evframe/tensor.hpp"

namespace evframe {

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

namespace detail {

// Splits on '\n'. A single trailing newline does not produce an extra empty line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

template <typename Int>
Int parse_int(std::string_view field, std::size_t line, const char* name) {
  Int v{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty())
    throw ParseError(std::string("field '") + name + "' is not an integer: '" + std::string(field) + "'", line);
  return v;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Events

inline constexpr std::string_view kEventHeader = "t,x,y,p";

inline std::string encode_events(const EventStream& stream) {
  std::string out(kEventHeader);
  out.push_back('\n');
  for (const auto& e : stream.events) {
    out += std::to_string(e.t);
    out.push_back(',');
    out += std::to_string(e.x);
    out.push_back(',');
    out += std::to_string(e.y);
    out.push_back(',');
    out += std::to_string(e.p);
    out.push_back('\n');
  }
  return out;
}

// Sensor dims of 0 are inferred as (max coordinate + 1).
inline EventStream decode_events(std::string_view text, int sensor_width = 0, int sensor_height = 0) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || lines[0] != kEventHeader)
    throw ParseError("missing header 't,x,y,p'", 1);
  EventStream stream;
  stream.events.reserve(lines.size() - 1);
  int max_x = -1, max_y = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view row = lines[i];
    std::string_view fields[4];
    std::size_t n = 0, start = 0;
    for (;;) {
      const std::size_t comma = row.find(',', start);
      if (n == 4) throw ParseError("expected 4 fields", line_no);
      fields[n++] = row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (n != 4) throw ParseError("expected 4 fields, got " + std::to_string(n), line_no);
    Event e;
    e.t = detail::parse_int<std::int64_t>(fields[0], line_no, "t");
    e.x = detail::parse_int<std::int32_t>(fields[1], line_no, "x");
    e.y = detail::parse_int<std::int32_t>(fields[2], line_no, "y");
    e.p = detail::parse_int<std::int32_t>(fields[3], line_no, "p");
    if (e.p != 1 && e.p != -1)
      throw DomainError("line " + std::to_string(line_no) + ": polarity must be -1 or +1, got " + std::to_string(e.p));
    if (e.x < 0 || e.y < 0)
      throw DomainError("line " + std::to_string(line_no) + ": negative pixel coordinate");
    if (sensor_width > 0 && e.x >= sensor_width)
      throw DomainError("line " + std::to_string(line_no) + ": x=" + std::to_string(e.x) + " outside sensor width " +
                        std::to_string(sensor_width));
    if (sensor_height > 0 && e.y >= sensor_height)
      throw DomainError("line " + std::to_string(line_no) + ": y=" + std::to_string(e.y) + " outside sensor height " +
                        std::to_string(sensor_height));
    if (!stream.events.empty() && e.t < stream.events.back().t)
      throw DomainError("line " + std::to_string(line_no) + ": timestamps must be non-decreasing");
    max_x = std::max(max_x, e.x);
    max_y = std::max(max_y, e.y);
    stream.events.push_back(e);
  }
  stream.width = sensor_width > 0 ? sensor_width : max_x + 1;
  stream.height = sensor_height > 0 ? sensor_height : max_y + 1;
  return stream;
}

// ---------------------------------------------------------------------------
// PNM

inline std::string encode_pnm(const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw FormatError("PNM supports 1 or 3 channels");
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw ShapeError("image byte count does not match dims");
  std::string out = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

inline Image decode_pnm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_ws_and_comments = [&] {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_ws_and_comments();
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') ++pos;
    if (start == pos) throw FormatError(std::string("PNM header: missing ") + what);
    return detail::parse_int<int>(bytes.substr(start, pos - start), 0, what);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("unsupported PNM magic (expected P5 or P6)");
  const int channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const int w = read_uint("width");
  const int h = read_uint("height");
  const int maxval = read_uint("maxval");
  if (maxval != 255) throw FormatError("unsupported PNM maxval " + std::to_string(maxval) + " (expected 255)");
  if (w <= 0 || h <= 0) throw FormatError("PNM dims must be positive");
  if (pos >= bytes.size() || !(bytes[pos] == ' ' || bytes[pos] == '\n' || bytes[pos] == '\t' || bytes[pos] == '\r'))
    throw FormatError("PNM header must end with a single whitespace byte");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - pos != need)
    throw TruncationError("PNM payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                          std::to_string(need));
  Image img(w, h, channels);
  std::memcpy(img.pixels.data(), bytes.data() + pos, need);
  return img;
}

// ---------------------------------------------------------------------------
// Tensors

inline constexpr std::string_view kTensorMagic = "FTNS";

inline std::string encode_tensor(const Tensorf& t) {
  std::string out(kTensorMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.dims()) detail::put_u32(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + 4 * t.size());
  for (float v : t.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline Tensorf decode_tensor(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != kTensorMagic) throw FormatError("missing FTNS magic");
  const std::uint32_t rank = detail::get_u32(bytes, 4);
  if (rank < 1 || rank > 4) throw FormatError("tensor rank must be 1..4, got " + std::to_string(rank));
  if (bytes.size() < 8 + 4 * static_cast<std::size_t>(rank)) throw TruncationError("tensor dims truncated");
  Dims dims(rank);
  for (std::uint32_t i = 0; i < rank; ++i) dims[i] = detail::get_u32(bytes, 8 + 4 * i);
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  const std::size_t count = dims_product(dims);
  if (bytes.size() - header != 4 * count)
    throw TruncationError("tensor payload has " + std::to_string(bytes.size() - header) + " bytes, expected " +
                          std::to_string(4 * count) + " for dims " + dims_to_string(dims));
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(detail::get_u32(bytes, header + 4 * i));
  return Tensorf(std::move(dims), std::move(values));
}

inline void save_tensor(const std::filesystem::path& path, const Tensorf& t) { write_file(path, encode_tensor(t)); }
inline Tensorf load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

// Named tensors stored next to a JSON manifest.
using TensorBundle = std::map<std::string, Tensorf>;

inline void save_bundle(const std::filesystem::path& manifest, const TensorBundle& bundle) {
  const auto dir = manifest.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  const std::string stem = manifest.stem().string();
  for (const auto& [name, t] : bundle) {
    const std::string file = stem + "." + name + ".ftns";
    save_tensor(dir / file, t);
    j[name] = file;
  }
  write_file(manifest, j.dump(2) + "\n");
}

inline TensorBundle load_bundle(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bundle manifest: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("bundle manifest must be a JSON object");
  TensorBundle bundle;
  for (const auto& [name, path] : j.items()) {
    if (!path.is_string()) throw SchemaError("bundle member '" + name + "' must map to a path");
    std::filesystem::path p = path.get<std::string>();
    if (p.is_relative()) p = manifest.parent_path() / p;
    bundle.emplace(name, load_tensor(p));
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Calibration

inline constexpr std::string_view kCalibrationKeys[] = {"K_rgb", "K_event", "R_rgb", "R_event", "R_event_rgb"};

inline CameraRig parse_calibration(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("calibration: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("calibration must be a JSON object");
  CameraRig rig;
  Eigen::Matrix3d* members[] = {&rig.K_rgb, &rig.K_event, &rig.R_rgb, &rig.R_event, &rig.R_event_rgb};
  for (std::size_t m = 0; m < 5; ++m) {
    const std::string key(kCalibrationKeys[m]);
    if (!j.contains(key)) throw SchemaError("calibration is missing matrix '" + key + "'");
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 9)
      throw SchemaError("calibration matrix '" + key + "' must be a 9-element array");
    for (std::size_t i = 0; i < 9; ++i) {
      if (!arr[i].is_number()) throw SchemaError("calibration matrix '" + key + "' has a non-numeric entry");
      (*members[m])(static_cast<int>(i / 3), static_cast<int>(i % 3)) = arr[i].get<double>();
    }
  }
  validate_rig(rig);
  return rig;
}

inline std::string encode_calibration(const CameraRig& rig) {
  nlohmann::ordered_json j;
  const Eigen::Matrix3d* members[] = {&rig.K_rgb, &rig.K_event, &rig.R_rgb, &rig.R_event, &rig.R_event_rgb};
  for (std::size_t m = 0; m < 5; ++m) {
    std::vector<double> flat(9);
    for (int i = 0; i < 9; ++i) flat[i] = (*members[m])(i / 3, i % 3);
    j[std::string(kCalibrationKeys[m])] = flat;
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Detections

inline const std::set<int>& default_categories() {
  static const std::set<int> cats = {0, 1, 2};
  return cats;
}

inline std::string encode_detections(const DetectionSet& dets) {
  std::string out;
  for (const auto& d : dets) {
    nlohmann::ordered_json j;
    j["image_id"] = d.image_id;
    j["category_id"] = d.category_id;
    j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
    if (d.score) j["score"] = *d.score;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline DetectionSet decode_detections(std::string_view text, const std::set<int>& categories = default_categories()) {
  DetectionSet out;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error&) {
      throw ParseError("invalid JSON record", line_no);
    }
    if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);
    Detection d;
    try {
      d.image_id = j.at("image_id").get<std::int64_t>();
      d.category_id = j.at("category_id").get<int>();
      const auto& b = j.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ParseError("bbox must have 4 numbers", line_no);
      d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      if (j.contains("score")) d.score = j.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), line_no);
    }
    if (!(d.bbox.w > 0.0) || !(d.bbox.h > 0.0))
      throw DomainError("line " + std::to_string(line_no) + ": bbox w and h must be positive");
    if (!categories.contains(d.category_id))
      throw DomainError("line " + std::to_string(line_no) + ": unknown category_id " + std::to_string(d.category_id));
    if (d.score && !(*d.score >= 0.0 && *d.score <= 1.0))
      throw DomainError("line " + std::to_string(line_no) + ": score outside [0,1]");
    out.push_back(d);
  }
  return out;
}

}  // namespace evframe
