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

// evframe command-line front end. Exit codes: 0 ok, 1 domain/validation error, 2 usage error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evframe/bundles.hpp"
#include "evframe/cafr.hpp"
#include "evframe/corruption.hpp"
#include "evframe/detect_head.hpp"
#include "evframe/errors.hpp"
#include "evframe/eval_metrics.hpp"
#include "evframe/event_core.hpp"
#include "evframe/formats_io.hpp"
#include "evframe/geometry.hpp"
#include "evframe/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace evframe;

namespace {

constexpr const char* kEventFormat =
    "EventFile: CSV with header 't,x,y,p', one event per line; t integer microseconds,\n"
    "  non-decreasing; x,y integer pixels; p in {-1,+1}.";
constexpr const char* kImageFormat = "Images: binary PGM (P5, grayscale) or PPM (P6, RGB), maxval 255.";
constexpr const char* kTensorFormat =
    "TensorFile (.ftns): 'FTNS', u32 rank, rank x u32 dims, then float32 row-major payload; little endian.\n"
    "Bundle: JSON object mapping tensor names to .ftns paths (relative to the manifest).";
constexpr const char* kCalibFormat =
    "Calibration: JSON object with 3x3 row-major arrays K_rgb, K_event, R_rgb, R_event, R_event_rgb.";
constexpr const char* kDetectionFormat =
    "DetectionFile: JSON lines {\"image_id\":int,\"category_id\":0|1|2,\"bbox\":[x,y,w,h],\"score\":0..1};\n"
    "  bbox is top-left corner plus size in pixels; score omitted for ground truth.";

std::string join_lines(std::initializer_list<const char*> parts) {
  std::string s = "\nFile formats:\n";
  for (const char* p : parts) s += std::string(p) + "\n";
  return s;
}

Image load_image(const std::string& path) { return decode_pnm(read_file(path)); }

unsigned worker_cap(unsigned requested) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EVFRAME_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      throw ValidationError(std::string("EVFRAME_THREADS is not a positive integer: ") + env);
    }
  }
  return std::max(1u, n);
}

CompositionOrder parse_order(const std::string& s) {
  return s == "conventional" ? CompositionOrder::kConventional : CompositionOrder::kAsPrinted;
}

// Merges a flat JSON flag map into the argument list. Flags given on the command
// line win; keys that are not flags of the subcommand fail at parse time.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw CLI::ValidationError("--config", std::string("config file is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "config file must be a flat JSON object");
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") throw CLI::ValidationError("--config", "config files cannot nest");
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    auto scalar = [&](const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
      if (v.is_number_float()) {
        std::ostringstream ss;
        ss.precision(17);
        ss << v.get<double>();
        return ss.str();
      }
      throw CLI::ValidationError("--config", "unsupported value for key '" + key + "'");
    };
    if (value.is_boolean()) {
      args.push_back(flag + (value.get<bool>() ? "=true" : "=false"));
    } else if (value.is_array()) {
      args.push_back(flag);
      for (const auto& v : value) args.push_back(scalar(v));
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

void add_config_flag(CLI::App* sub) {
  sub->add_option("--config", "JSON file with a flat flag map; command-line flags override it");
}

// ---------------------------------------------------------------------------

struct Commands {
  std::map<CLI::App*, std::function<int()>> run;
};

void add_simulate(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("simulate-events", "Simulate an event stream between two frames");
  sub->footer(join_lines({kImageFormat, kEventFormat}));
  auto o = std::make_shared<std::tuple<std::string, std::string, std::string, std::int64_t, std::int64_t,
                                       double, double>>("", "", "", 0, 50000, 0.2, 1.0 / 255);
  auto& [a, b, out, ta, tb, thr, eps] = *o;
  sub->add_option("--frame-a", a, "First frame (PGM/PPM; RGB is converted to luma)")->required();
  sub->add_option("--frame-b", b, "Second frame")->required();
  sub->add_option("--out", out, "Output EventFile")->required();
  sub->add_option("--t-a", ta, "Timestamp of the first frame (us)")->capture_default_str();
  sub->add_option("--t-b", tb, "Timestamp of the second frame (us)")->capture_default_str();
  sub->add_option("--threshold", thr, "Contrast threshold C in log-intensity units")->capture_default_str();
  sub->add_option("--log-eps", eps, "Offset added to [0,1] intensity before the log")->capture_default_str();
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    auto& [a, b, out, ta, tb, thr, eps] = *o;
    const auto stream = simulate_events(to_gray(load_image(a)), to_gray(load_image(b)), ta, tb, {thr, eps});
    write_file(out, encode_events(stream));
    std::cerr << stream.events.size() << " events\n";
    return 0;
  };
}

void add_evt2grid(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("evt2grid", "Accumulate an EventFile into a B x H x W voxel grid");
  sub->footer(join_lines({kEventFormat, kTensorFormat}));
  auto o = std::make_shared<std::tuple<std::string, std::string, int, int, int>>("", "", 5, 0, 0);
  auto& [in, out, bins, w, h] = *o;
  sub->add_option("--input", in, "Input EventFile")->required();
  sub->add_option("--out", out, "Output TensorFile [B,H,W]")->required();
  sub->add_option("--bins", bins, "Number of temporal bins B")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--width", w, "Sensor width (0: infer from events)")->capture_default_str();
  sub->add_option("--height", h, "Sensor height (0: infer from events)")->capture_default_str();
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    auto& [in, out, bins, w, h] = *o;
    const auto grid = build_voxel_grid(decode_events(read_file(in), w, h), bins);
    save_tensor(out, grid.data.cast<float>());
    return 0;
  };
}

struct WarpOpts {
  std::string input, calib, out, order = "printed", interp = "bilinear";
  int width = 0, height = 0;
  bool inverse = false;
};

void add_warp_common(CLI::App* sub, WarpOpts& o) {
  sub->add_option("--calib", o.calib, "Calibration JSON")->required();
  sub->add_option("--out", o.out, "Output file")->required();
  sub->add_option("--order", o.order, "Homography composition order")
      ->check(CLI::IsMember({"printed", "conventional"}))->capture_default_str();
  sub->add_flag("--inverse", o.inverse, "Apply the inverse map (event view to RGB view)");
  add_config_flag(sub);
}

Homography rig_homography(const WarpOpts& o) {
  const auto h = compose_homography(parse_calibration(read_file(o.calib)), parse_order(o.order));
  return o.inverse ? h.inverse() : h;
}

void add_warp(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("warp", "Resample an image through the RGB -> event homography");
  sub->footer(join_lines({kImageFormat, kCalibFormat}));
  auto o = std::make_shared<WarpOpts>();
  sub->add_option("--input", o->input, "Input image")->required();
  sub->add_option("--width", o->width, "Output width (0: input width)");
  sub->add_option("--height", o->height, "Output height (0: input height)");
  sub->add_option("--interp", o->interp, "Interpolation")
      ->check(CLI::IsMember({"bilinear", "nearest"}))->capture_default_str();
  add_warp_common(sub, *o);
  cmds.run[sub] = [o] {
    const auto src = load_image(o->input);
    const auto h = rig_homography(*o);
    const auto out = warp_image(h, src, o->width ? o->width : src.width, o->height ? o->height : src.height,
                                o->interp == "nearest" ? Interpolation::kNearest : Interpolation::kBilinear);
    write_file(o->out, encode_pnm(out));
    return 0;
  };
}

void add_warp_labels(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("warp-labels", "Map DetectionFile boxes through the homography");
  sub->footer(join_lines({kDetectionFormat, kCalibFormat}));
  auto o = std::make_shared<WarpOpts>();
  sub->add_option("--input", o->input, "Input DetectionFile")->required();
  sub->add_option("--width", o->width, "Target image width used for clipping")->required()->check(CLI::PositiveNumber);
  sub->add_option("--height", o->height, "Target image height used for clipping")->required()->check(CLI::PositiveNumber);
  add_warp_common(sub, *o);
  cmds.run[sub] = [o] {
    const auto h = rig_homography(*o);
    DetectionSet out;
    std::size_t dropped = 0;
    for (auto d : decode_detections(read_file(o->input))) {
      const auto b = warp_bbox(h, d.bbox, o->width, o->height);
      if (!b) {
        ++dropped;
        continue;
      }
      d.bbox = *b;
      out.push_back(d);
    }
    write_file(o->out, encode_detections(out));
    if (dropped) std::cerr << dropped << " box(es) left the target frame and were dropped\n";
    return 0;
  };
}

std::string corruption_list() {
  std::string s;
  for (auto n : kCorruptionNames) s += (s.empty() ? "" : ", ") + std::string(n);
  return s;
}

void add_corrupt(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("corrupt", "Apply one corruption at one severity to an image");
  sub->footer(join_lines({kImageFormat}) + "Types: " + corruption_list() + "\n");
  auto o = std::make_shared<std::tuple<std::string, std::string, std::string, int, std::uint64_t>>("", "", "", 1, 0);
  auto& [in, out, type, sev, seed] = *o;
  sub->add_option("--input", in, "Input image")->required();
  sub->add_option("--out", out, "Output image")->required();
  sub->add_option("--type", type, "Corruption type")->required();
  sub->add_option("--severity", sev, "Severity 1..5")->required()->check(CLI::Range(1, 5));
  sub->add_option("--seed", seed, "Random seed")->capture_default_str();
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    auto& [in, out, type, sev, seed] = *o;
    const auto t = corruption_from_name(type);
    if (!t) throw DomainError("unknown corruption type '" + type + "'; expected one of: " + corruption_list());
    write_file(out, encode_pnm(apply_corruption(load_image(in), {*t, sev, seed})));
    return 0;
  };
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& s : inputs) {
    const fs::path p = s;
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

void add_corrupt_dataset(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("corrupt-dataset", "Write all 15 x 5 corruption variants of a set of images");
  sub->footer(join_lines({kImageFormat}) +
              "Manifest: out-dir/manifest.jsonl, one {\"src\",\"dst\",\"type\",\"severity\",\"seed\"} per variant.\n"
              "EVFRAME_THREADS caps the worker count.\n");
  struct Opts {
    std::vector<std::string> inputs;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->inputs, "Input images or directories of .pgm/.ppm")->required();
  sub->add_option("--out-dir", o->out_dir, "Output directory")->required();
  sub->add_option("--seed", o->seed, "Base seed; per-variant seeds derive from (seed, image, type, severity)")
      ->capture_default_str();
  sub->add_option("--threads", o->threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    const auto files = expand_inputs(o->inputs);
    const auto rows = corrupt_dataset(files, o->out_dir, o->seed, worker_cap(o->threads));
    std::cerr << rows.size() << " variants written\n";
    return 0;
  };
}

struct CafrFlags {
  bool no_mul_add = false, no_cross = false, no_refine = false, sigmoid_map = false;
  std::string branch = "dual";

  void add(CLI::App* sub) {
    sub->add_flag("--no-mul-add", no_mul_add, "Disable the multiply-add enhancement");
    sub->add_flag("--no-cross-attention", no_cross, "Disable cross-modality attention");
    sub->add_flag("--no-refine", no_refine, "Disable statistics refinement");
    sub->add_flag("--sigmoid-map", sigmoid_map, "Squash the attention map through a sigmoid");
    sub->add_option("--branch", branch, "Output branch")->check(CLI::IsMember({"dual", "frame", "event"}))
        ->capture_default_str();
  }
  CafrOptions options() const {
    CafrOptions opt;
    opt.mul_add = !no_mul_add;
    opt.cross_attention = !no_cross;
    opt.refine = !no_refine;
    opt.sigmoid_map = sigmoid_map;
    opt.branch = branch == "frame" ? CafrBranch::kFrameOnly : branch == "event" ? CafrBranch::kEventOnly : CafrBranch::kDual;
    return opt;
  }
};

void add_cafr_forward(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("cafr-forward", "Fuse a frame and an event feature map with CAFR");
  sub->footer(join_lines({kTensorFormat}) +
              "Weights bundle keys: cafr.conv_f.kernel, cafr.conv_f.bias, cafr.conv_e.kernel, cafr.conv_e.bias,\n"
              "  cafr.wq_f, cafr.wk_f, cafr.wv_f, cafr.wq_e, cafr.wk_e, cafr.wv_e, cafr.w_f, cafr.w_e.\n");
  struct Opts {
    std::string frame, event, weights, save_weights, out;
    std::uint64_t seed = 0;
    CafrFlags flags;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--frame", o->frame, "Frame features [C,H,W]")->required();
  sub->add_option("--event", o->event, "Event features [C,H,W]")->required();
  sub->add_option("--out", o->out, "Output features [2C,H,W] (or [C,H,W] for a single branch)")->required();
  sub->add_option("--weights", o->weights, "Weights bundle manifest (default: random from --seed)");
  sub->add_option("--save-weights", o->save_weights, "Write the weights used to this bundle manifest");
  sub->add_option("--seed", o->seed, "Seed for random weights")->capture_default_str();
  o->flags.add(sub);
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    FeaturePair<double> pair{load_tensor(o->frame).cast<double>(), load_tensor(o->event).cast<double>()};
    if (pair.frame.rank() != 3) throw ShapeError("frame features must be [C,H,W]");
    const std::size_t c = pair.frame.dim(0);
    CafrWeights<float> wf;
    if (!o->weights.empty()) {
      wf = cafr_from_bundle(load_bundle(o->weights));
    } else {
      Rng rng(o->seed);
      wf = CafrWeights<float>::random(c, rng);
    }
    if (!o->save_weights.empty()) save_bundle(o->save_weights, to_bundle(wf));
    const auto out = cafr_forward(pair, wf.cast<double>(), o->flags.options());
    save_tensor(o->out, out.cast<float>());
    return 0;
  };
}

void add_cafr_gradcheck(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("cafr-gradcheck", "Check CAFR analytic gradients against central differences");
  struct Opts {
    std::size_t c = 4, h = 3, w = 2, probes = 50;
    double step = 1e-5, tol = 1e-5;
    std::uint64_t seed = 0;
    CafrFlags flags;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--channels", o->c, "C")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--height", o->h, "H")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--width", o->w, "W")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--probes", o->probes, "Number of directional probes")->capture_default_str();
  sub->add_option("--step", o->step, "Central-difference step")->capture_default_str();
  sub->add_option("--tolerance", o->tol, "Maximum accepted relative error")->capture_default_str();
  sub->add_option("--seed", o->seed, "Seed for inputs, weights and probe directions")->capture_default_str();
  o->flags.add(sub);
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    Rng rng(o->seed);
    const auto pair = random_feature_pair<double>(o->c, o->h, o->w, rng);
    const auto w = CafrWeights<double>::random(o->c, rng);
    const auto rep = cafr_gradcheck_report(pair, w, o->probes, o->step, derive_seed({o->seed, 1}), o->flags.options());
    json j;
    j["max_rel_error"] = rep.max_rel_error;
    j["probes"] = o->probes;
    j["tolerance"] = o->tol;
    j["pass"] = rep.max_rel_error < o->tol;
    std::cout << j.dump(2) << "\n";
    if (!(rep.max_rel_error < o->tol))
      throw ValidationError("gradient check failed: max relative error " + std::to_string(rep.max_rel_error));
    return 0;
  };
}

void add_head_decode(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("head-decode", "Run the detection head on a feature pyramid and decode boxes");
  sub->footer(join_lines({kTensorFormat, kDetectionFormat}) +
              "Pyramid bundle keys: p1..p5, each [C,H_l,W_l] with H_{l+1} = ceil(H_l/2).\n"
              "Head bundle keys: head.clsI.*, head.regI.* (I < --num-convs), head.cls_out.*, head.reg_out.*\n"
              "  where * is kernel or bias.\n");
  struct Opts {
    std::string pyramid, weights, save_weights, out;
    int num_classes = 3, num_convs = 4, base_stride = 8;
    std::int64_t image_id = 0;
    double image_w = 0, image_h = 0, score = 0.05, nms_iou = 0.5;
    std::size_t max_det = 100;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--pyramid", o->pyramid, "Pyramid bundle manifest")->required();
  sub->add_option("--out", o->out, "Output DetectionFile")->required();
  sub->add_option("--image-width", o->image_w, "Image width for clipping")->required()->check(CLI::PositiveNumber);
  sub->add_option("--image-height", o->image_h, "Image height for clipping")->required()->check(CLI::PositiveNumber);
  sub->add_option("--weights", o->weights, "Head weights bundle manifest (default: random from --seed)");
  sub->add_option("--save-weights", o->save_weights, "Write the head weights used to this manifest");
  sub->add_option("--seed", o->seed, "Seed for random weights")->capture_default_str();
  sub->add_option("--num-classes", o->num_classes, "K")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--num-convs", o->num_convs, "Tower depth")->capture_default_str();
  sub->add_option("--base-stride", o->base_stride, "Stride of p1 in pixels")->capture_default_str();
  sub->add_option("--image-id", o->image_id, "image_id written to every detection")->capture_default_str();
  sub->add_option("--score-threshold", o->score, "Minimum class score")->capture_default_str();
  sub->add_option("--nms-iou", o->nms_iou, "NMS IoU threshold")->capture_default_str();
  sub->add_option("--max-detections", o->max_det, "Detections kept per image")->capture_default_str();
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    const auto bundle = load_bundle(o->pyramid);
    FeaturePyramid<float> pyr;
    for (int l = 1; l <= 5; ++l) {
      const auto it = bundle.find("p" + std::to_string(l));
      if (it == bundle.end()) throw SchemaError("pyramid bundle is missing p" + std::to_string(l));
      if (it->second.rank() != 3) throw ShapeError("pyramid level p" + std::to_string(l) + " must be [C,H,W]");
      if (l > 1) {
        const auto& prev = pyr.levels.back();
        if (it->second.dim(1) != ceil_half(prev.dim(1)) || it->second.dim(2) != ceil_half(prev.dim(2)))
          throw ShapeError("pyramid level p" + std::to_string(l) + " must halve the previous level (rounding up)");
      }
      pyr.levels.push_back(it->second);
      pyr.strides.push_back(o->base_stride << (l - 1));
    }
    HeadConfig cfg;
    cfg.num_classes = o->num_classes;
    cfg.num_convs = o->num_convs;
    cfg.channels = static_cast<int>(pyr.levels[0].dim(0));
    cfg.score_threshold = o->score;
    cfg.nms_iou = o->nms_iou;
    cfg.max_detections = o->max_det;
    cfg.validate();
    HeadWeights<float> w;
    if (!o->weights.empty()) {
      w = head_from_bundle(load_bundle(o->weights), cfg);
    } else {
      Rng rng(o->seed);
      w = HeadWeights<float>::random(cfg, rng);
    }
    if (!o->save_weights.empty()) save_bundle(o->save_weights, to_bundle(w));
    const auto head = head_forward(pyr, w, cfg);
    std::set<int> cats;
    for (int k = 0; k < cfg.num_classes; ++k) cats.insert(k);
    const auto dets = decode_head(head, pyramid_anchors(pyr, cfg), cfg, o->image_id, o->image_w, o->image_h);
    write_file(o->out, encode_detections(dets));
    std::cerr << dets.size() << " detections\n";
    return 0;
  };
}

json map_to_json(const MapResult& r) {
  json j;
  j["map"] = r.map;
  j["map50"] = r.map50;
  json pc = json::object();
  for (const auto& [k, v] : r.per_class) pc[std::to_string(k)] = v;
  j["per_class"] = pc;
  j["per_threshold"] = r.per_threshold;
  return j;
}

void add_eval_map(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("eval-map", "COCO-style mAP of predictions against ground truth");
  sub->footer(join_lines({kDetectionFormat}) + "Prints a JSON report {map, map50, per_class, per_threshold}.\n");
  auto o = std::make_shared<std::tuple<std::string, std::string, std::string>>();
  auto& [pred, gt, out] = *o;
  sub->add_option("--pred", pred, "Predictions DetectionFile (scores required)")->required();
  sub->add_option("--gt", gt, "Ground-truth DetectionFile")->required();
  sub->add_option("--out", out, "Also write the report to this file");
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    auto& [pred, gt, out] = *o;
    const auto p = decode_detections(read_file(pred));
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!p[i].score) throw ValidationError("prediction " + std::to_string(i + 1) + " has no score");
    const auto report = map_to_json(map_coco(p, decode_detections(read_file(gt)))).dump(2) + "\n";
    std::cout << report;
    if (!out.empty()) write_file(out, report);
    return 0;
  };
}

CorruptionMatrix parse_matrix(const nlohmann::json& m) {
  if (m.is_object()) {
    CorruptionMatrix cm(kNumCorruptionTypes, kNumSeverities);
    for (const auto& [name, row] : m.items()) {
      const auto t = corruption_from_name(name);
      if (!t) throw DomainError("unknown corruption type '" + name + "' in matrix");
      if (!row.is_array() || row.size() != static_cast<std::size_t>(kNumSeverities))
        throw DomainError("matrix row '" + name + "' must hold 5 severities");
      for (std::size_t s = 0; s < row.size(); ++s) {
        if (!row[s].is_null()) cm.entries[static_cast<std::size_t>(*t)][s] = row[s].get<double>();
      }
    }
    return cm;
  }
  if (m.is_array()) {
    CorruptionMatrix cm;
    for (const auto& row : m) {
      if (!row.is_array()) throw SchemaError("matrix rows must be arrays");
      std::vector<std::optional<double>> r;
      for (const auto& v : row) r.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      cm.entries.push_back(std::move(r));
    }
    return cm;
  }
  throw SchemaError("'matrix' must be an object keyed by corruption type or an array of rows");
}

void add_eval_mpc(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("eval-mpc", "mPC and per-severity rPC from a corruption mAP matrix");
  sub->footer(
      "\nFile formats:\n"
      "Matrix JSON: {\"map_clean\": x, \"matrix\": {\"<type>\": [s1..s5], ...}} with all 15 types, or\n"
      "  \"matrix\": [[...], ...] rows of per-severity mAP (any shape with --any-shape). Values in [0,1].\n"
      "Types: " + corruption_list() + "\n");
  auto o = std::make_shared<std::tuple<std::string, bool>>("", false);
  auto& [in, any] = *o;
  sub->add_option("--input", in, "Matrix JSON")->required();
  sub->add_flag("--any-shape", any, "Accept matrices other than 15 x 5");
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    auto& [in, any] = *o;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("matrix file: ") + e.what());
    }
    if (!j.is_object() || !j.contains("map_clean") || !j.contains("matrix"))
      throw SchemaError("matrix file needs 'map_clean' and 'matrix'");
    const auto rep = mpc_report(j.at("map_clean").get<double>(), parse_matrix(j.at("matrix")),
                                any ? MatrixMode::kAnyShape : MatrixMode::kProduction);
    json out;
    out["map_clean"] = rep.map_clean;
    json rows = json::array();
    for (const auto& row : rep.matrix.entries) {
      json r = json::array();
      for (const auto& v : row) r.push_back(v ? json(*v) : json(nullptr));
      rows.push_back(r);
    }
    out["map_matrix"] = rows;
    out["mpc"] = rep.mpc;
    out["rpc"] = rep.rpc;
    std::cout << out.dump(2) << "\n";
    return 0;
  };
}

void add_pipeline_demo(CLI::App& app, Commands& cmds) {
  auto* sub = app.add_subcommand("pipeline-demo",
                                 "Synthetic frames -> events -> grid -> CAFR -> head -> NMS -> DetectionFile -> mAP");
  sub->footer(join_lines({kImageFormat, kEventFormat, kTensorFormat, kDetectionFormat}) +
              "Outputs in --out-dir: frame_a.ppm, frame_b.ppm, events.csv, grid.ftns, detections.jsonl,\n"
              "  ground_truth.jsonl, eval.json.\n");
  struct Opts {
    DemoConfig cfg;
    std::string out_dir = "pipeline_demo";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--seed", o->cfg.seed, "Seed for scene and weights")->capture_default_str();
  sub->add_option("--width", o->cfg.width, "Frame width")->capture_default_str();
  sub->add_option("--height", o->cfg.height, "Frame height")->capture_default_str();
  sub->add_option("--channels", o->cfg.channels, "Network width")->capture_default_str();
  sub->add_option("--bins", o->cfg.bins, "Voxel-grid bins")->capture_default_str();
  sub->add_option("--objects", o->cfg.objects, "Objects in the scene")->capture_default_str();
  sub->add_option("--out-dir", o->out_dir, "Output directory")->capture_default_str();
  add_config_flag(sub);
  cmds.run[sub] = [o] {
    const auto res = run_pipeline_demo(o->cfg);
    const fs::path dir = o->out_dir;
    fs::create_directories(dir);
    write_file(dir / "frame_a.ppm", encode_pnm(res.frame_a));
    write_file(dir / "frame_b.ppm", encode_pnm(res.frame_b));
    write_file(dir / "events.csv", encode_events(res.events));
    save_tensor(dir / "grid.ftns", res.grid.data.cast<float>());
    write_file(dir / "detections.jsonl", encode_detections(res.detections));
    write_file(dir / "ground_truth.jsonl", encode_detections(res.ground_truth));
    // evaluate from the written files so the DetectionFile roundtrip is exercised
    const auto preds = decode_detections(read_file(dir / "detections.jsonl"));
    const auto gts = decode_detections(read_file(dir / "ground_truth.jsonl"));
    const auto eval = map_to_json(map_coco(preds, gts));
    write_file(dir / "eval.json", eval.dump(2) + "\n");
    json summary;
    summary["events"] = res.events.events.size();
    summary["detections"] = preds.size();
    summary["eval"] = eval;
    json checks = json::object();
    for (const auto& c : res.checks) {
      checks[c.name] = c.ok;
      std::cerr << (c.ok ? "ok   " : "FAIL ") << c.name << ": " << c.detail << "\n";
    }
    summary["checks"] = checks;
    std::cout << summary.dump(2) << "\n";
    if (!res.all_ok() || preds.empty()) throw ValidationError("pipeline-demo invariant check failed");
    return 0;
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evframe: event + frame fusion toolkit (simulation, alignment, CAFR fusion, detection, robustness)"};
  app.name("evframe");
  app.require_subcommand(1);
  app.fallthrough(false);
  Commands cmds;
  add_simulate(app, cmds);
  add_evt2grid(app, cmds);
  add_warp(app, cmds);
  add_warp_labels(app, cmds);
  add_corrupt(app, cmds);
  add_corrupt_dataset(app, cmds);
  add_cafr_forward(app, cmds);
  add_cafr_gradcheck(app, cmds);
  add_head_decode(app, cmds);
  add_eval_map(app, cmds);
  add_eval_mpc(app, cmds);
  add_pipeline_demo(app, cmds);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const evframe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    for (const auto& [sub, fn] : cmds.run)
      if (sub->parsed()) return fn();
    std::cerr << app.help();
    return 2;
  } catch (const evframe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
