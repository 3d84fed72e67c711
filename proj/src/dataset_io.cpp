// Copyright 2026 The affuq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "affuq/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "affuq/rle.hpp"

namespace affuq
{

double round_sig9(double value)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return std::strtod(buf, nullptr);
}

json parse_json_text(std::string_view text, const std::string & source)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error & e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(
      ErrorKind::kParse,
      source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" + e.what() + ")");
  }
}

std::string read_text_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open '" + path + "' for reading");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string & path) { return parse_json_text(read_text_file(path), path); }

void write_text_file(const std::string & path, std::string_view text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw Error(ErrorKind::kIo, "failed writing '" + path + "'");
  }
}

std::string dump_compact(const json & doc) { return doc.dump() + "\n"; }
std::string dump_pretty(const json & doc) { return doc.dump(2) + "\n"; }

namespace
{

[[noreturn]] void schema_error(const std::string & path, const std::string & what)
{
  throw Error(ErrorKind::kSchema, path + ": " + what);
}

const json & field(const json & obj, const char * key, const std::string & path)
{
  if (!obj.is_object()) {
    schema_error(path, "expected an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end()) {
    schema_error(path + "." + key, "missing field");
  }
  return *it;
}

const json & array_at(const json & obj, const char * key, const std::string & path)
{
  const json & v = field(obj, key, path);
  if (!v.is_array()) {
    schema_error(path + "." + key, "expected an array");
  }
  return v;
}

double as_number(const json & v, const std::string & path)
{
  if (!v.is_number()) {
    schema_error(path, "expected a number");
  }
  return v.get<double>();
}

int as_int(const json & v, const std::string & path)
{
  if (!v.is_number_integer()) {
    schema_error(path, "expected an integer");
  }
  return v.get<int>();
}

std::vector<double> as_numbers(const json & v, const std::string & path)
{
  if (!v.is_array()) {
    schema_error(path, "expected an array of numbers");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json rounded(std::span<const double> values)
{
  json arr = json::array();
  for (double v : values) {
    arr.push_back(round_sig9(v));
  }
  return arr;
}

json bbox_to_json(const BBox & b) { return json::array({round_sig9(b.x), round_sig9(b.y), round_sig9(b.w), round_sig9(b.h)}); }

BBox bbox_from_json(const json & v, const std::string & path)
{
  const std::vector<double> xs = as_numbers(v, path);
  if (xs.size() != 4) {
    schema_error(path, "bbox must be [x, y, w, h]");
  }
  if (!(xs[2] > 0.0 && xs[3] > 0.0)) {
    schema_error(path, "bbox width and height must be positive");
  }
  return {xs[0], xs[1], xs[2], xs[3]};
}

Extent extent_from_json(const json & v, const std::string & path)
{
  if (!v.is_array() || v.size() != 2) {
    schema_error(path, "image_extent must be [rows, cols]");
  }
  const Extent e{as_int(v[0], path + "[0]"), as_int(v[1], path + "[1]")};
  if (!e.valid()) {
    schema_error(path, "image_extent must be positive");
  }
  return e;
}

ClassProbs probs_from_json(const json & v, std::size_t dim, const std::string & path)
{
  std::vector<double> p = as_numbers(v, path);
  if (p.size() != dim) {
    schema_error(path, "expected " + std::to_string(dim) + " class probabilities, found " + std::to_string(p.size()));
  }
  try {
    return ClassProbs(std::move(p));
  } catch (const Error & e) {
    schema_error(path, e.what());
  }
}

json mask_to_json(const ProbMask & m)
{
  json out{
    {"origin", json::array({m.origin_row, m.origin_col})},
    {"rows", m.grid.rows()},
    {"cols", m.grid.cols()},
    {"values", rounded(m.grid.values())}};
  if (m.footprint_rows != m.grid.rows() || m.footprint_cols != m.grid.cols()) {
    out["footprint"] = json::array({m.footprint_rows, m.footprint_cols});
  }
  return out;
}

ProbMask mask_from_json(const json & v, const std::string & path)
{
  const json & origin = field(v, "origin", path);
  if (!origin.is_array() || origin.size() != 2) {
    schema_error(path + ".origin", "expected [row, col]");
  }
  ProbMask m;
  m.origin_row = as_int(origin[0], path + ".origin[0]");
  m.origin_col = as_int(origin[1], path + ".origin[1]");
  const int rows = as_int(field(v, "rows", path), path + ".rows");
  const int cols = as_int(field(v, "cols", path), path + ".cols");
  if (rows < 0 || cols < 0) {
    schema_error(path, "negative heatmap resolution");
  }
  std::vector<double> values = as_numbers(field(v, "values", path), path + ".values");
  if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    schema_error(path + ".values", "length does not match rows * cols");
  }
  m.grid = Grid(rows, cols, std::move(values));
  m.footprint_rows = rows;
  m.footprint_cols = cols;
  if (const auto it = v.find("footprint"); it != v.end()) {
    if (!it->is_array() || it->size() != 2) {
      schema_error(path + ".footprint", "expected [rows, cols]");
    }
    m.footprint_rows = as_int((*it)[0], path + ".footprint[0]");
    m.footprint_cols = as_int((*it)[1], path + ".footprint[1]");
  }
  try {
    m.validate();
  } catch (const Error & e) {
    schema_error(path, e.what());
  }
  return m;
}

json patch_values(const Patch & p) { return rounded(p.values.values()); }

Patch patch_from_json(const json & v, const Window & window, const std::string & path)
{
  std::vector<double> values = as_numbers(v, path);
  if (values.size() != static_cast<std::size_t>(std::max(0, window.rows)) * static_cast<std::size_t>(std::max(0, window.cols))) {
    schema_error(path, "length does not match the mask footprint");
  }
  for (double x : values) {
    if (!(x >= 0.0)) {
      schema_error(path, "variances must be non-negative");
    }
  }
  return {window, Grid(std::max(0, window.rows), std::max(0, window.cols), std::move(values))};
}

std::vector<std::string> classes_from_json(const json & doc)
{
  const json & classes = array_at(doc, "classes", "$");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!classes[i].is_string()) {
      schema_error("$.classes[" + std::to_string(i) + "]", "expected a string");
    }
    out.push_back(classes[i].get<std::string>());
  }
  if (out.empty()) {
    schema_error("$.classes", "at least one class is required");
  }
  return out;
}

void check_version(const json & doc)
{
  const int version = as_int(field(doc, "version", "$"), "$.version");
  if (version != kFormatVersion) {
    schema_error("$.version", "unsupported version " + std::to_string(version));
  }
}

bool background_from_json(const json & doc)
{
  const auto it = doc.find("background_class");
  if (it == doc.end()) {
    return false;
  }
  if (!it->is_boolean()) {
    schema_error("$.background_class", "expected a boolean");
  }
  return it->get<bool>();
}

void check_unique_ids(const std::vector<std::string> & ids, const char * what)
{
  std::set<std::string> seen;
  for (const auto & id : ids) {
    if (!seen.insert(id).second) {
      schema_error(what, "duplicate frame_id '" + id + "'");
    }
  }
}

}  // namespace

json dataset_to_json(const Dataset & dataset, const json & generator)
{
  std::vector<const Frame *> frames;
  for (const Frame & f : dataset.frames) {
    frames.push_back(&f);
  }
  std::stable_sort(frames.begin(), frames.end(), [](const Frame * a, const Frame * b) { return a->frame_id < b->frame_id; });

  json jframes = json::array();
  for (const Frame * f : frames) {
    json gts = json::array();
    for (const GroundTruthInstance & gt : f->ground_truth) {
      json counts = json::array();
      for (std::uint32_t c : rle_encode(gt.mask)) {
        counts.push_back(c);
      }
      gts.push_back(
        {{"bbox", bbox_to_json(gt.bbox)},
         {"class_id", gt.class_id},
         {"mask_rle", {{"size", json::array({gt.mask.rows(), gt.mask.cols()})}, {"counts", counts}}}});
    }
    json passes = json::array();
    for (const auto & pass : f->passes) {
      json dets = json::array();
      for (const Detection & d : pass) {
        dets.push_back(
          {{"bbox", bbox_to_json(d.bbox)}, {"class_probs", rounded(d.class_probs.values())}, {"mask", mask_to_json(d.mask)}});
      }
      passes.push_back(std::move(dets));
    }
    jframes.push_back({{"frame_id", f->frame_id}, {"ground_truth", std::move(gts)}, {"passes", std::move(passes)}});
  }
  json doc{
    {"version", kFormatVersion},
    {"classes", dataset.classes},
    {"background_class", dataset.background_class},
    {"image_extent", json::array({dataset.extent.rows, dataset.extent.cols})},
    {"frames", std::move(jframes)}};
  if (!generator.is_null()) {
    doc["generator"] = generator;
  }
  return doc;
}

DatasetDocument dataset_from_json(const json & doc)
{
  check_version(doc);
  DatasetDocument out;
  Dataset & ds = out.dataset;
  ds.classes = classes_from_json(doc);
  ds.background_class = background_from_json(doc);
  ds.extent = extent_from_json(field(doc, "image_extent", "$"), "$.image_extent");
  if (const auto it = doc.find("generator"); it != doc.end()) {
    out.generator = *it;
  }
  const std::size_t dim = ds.prob_dim();

  const json & frames = array_at(doc, "frames", "$");
  std::vector<std::string> ids;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const std::string fpath = "$.frames[" + std::to_string(fi) + "]";
    const json & jf = frames[fi];
    Frame frame;
    const json & id = field(jf, "frame_id", fpath);
    if (!id.is_string()) {
      schema_error(fpath + ".frame_id", "expected a string");
    }
    frame.frame_id = id.get<std::string>();
    frame.extent = ds.extent;
    ids.push_back(frame.frame_id);

    if (const auto it = jf.find("ground_truth"); it != jf.end()) {
      if (!it->is_array()) {
        schema_error(fpath + ".ground_truth", "expected an array");
      }
      for (std::size_t gi = 0; gi < it->size(); ++gi) {
        const std::string gpath = fpath + ".ground_truth[" + std::to_string(gi) + "]";
        const json & jg = (*it)[gi];
        GroundTruthInstance gt;
        gt.frame_id = frame.frame_id;
        gt.bbox = bbox_from_json(field(jg, "bbox", gpath), gpath + ".bbox");
        gt.class_id = as_int(field(jg, "class_id", gpath), gpath + ".class_id");
        const json & rle = field(jg, "mask_rle", gpath);
        const json & size = field(rle, "size", gpath + ".mask_rle");
        if (!size.is_array() || size.size() != 2) {
          schema_error(gpath + ".mask_rle.size", "expected [rows, cols]");
        }
        const Extent mask_extent{as_int(size[0], gpath + ".mask_rle.size[0]"), as_int(size[1], gpath + ".mask_rle.size[1]")};
        if (mask_extent != ds.extent) {
          schema_error(gpath + ".mask_rle.size", "mask size differs from image_extent");
        }
        const json & jcounts = array_at(rle, "counts", gpath + ".mask_rle");
        std::vector<std::uint32_t> counts;
        for (std::size_t k = 0; k < jcounts.size(); ++k) {
          if (!jcounts[k].is_number_unsigned() && !(jcounts[k].is_number_integer() && jcounts[k].get<long long>() >= 0)) {
            schema_error(gpath + ".mask_rle.counts[" + std::to_string(k) + "]", "expected a non-negative integer");
          }
          counts.push_back(jcounts[k].get<std::uint32_t>());
        }
        try {
          gt.mask = rle_decode(counts, ds.extent.rows, ds.extent.cols);
          gt.bbox = clip_bbox(gt.bbox, ds.extent);
          gt.validate(ds.classes.size());
        } catch (const Error & e) {
          schema_error(gpath, e.what());
        }
        frame.ground_truth.push_back(std::move(gt));
      }
    }

    const json & passes = array_at(jf, "passes", fpath);
    for (std::size_t m = 0; m < passes.size(); ++m) {
      const std::string ppath = fpath + ".passes[" + std::to_string(m) + "]";
      if (!passes[m].is_array()) {
        schema_error(ppath, "expected an array of detections");
      }
      std::vector<Detection> pass;
      for (std::size_t di = 0; di < passes[m].size(); ++di) {
        const std::string dpath = ppath + "[" + std::to_string(di) + "]";
        const json & jd = passes[m][di];
        Detection d;
        d.bbox = bbox_from_json(field(jd, "bbox", dpath), dpath + ".bbox");
        try {
          d.bbox = clip_bbox(d.bbox, ds.extent);
        } catch (const Error & e) {
          schema_error(dpath + ".bbox", e.what());
        }
        d.class_probs = probs_from_json(field(jd, "class_probs", dpath), dim, dpath + ".class_probs");
        d.mask = mask_from_json(field(jd, "mask", dpath), dpath + ".mask");
        d.sample_index = static_cast<int>(m);
        pass.push_back(std::move(d));
      }
      frame.passes.push_back(std::move(pass));
    }
    ds.frames.push_back(std::move(frame));
  }
  check_unique_ids(ids, "$.frames");
  return out;
}

json fuse_settings_to_json(const FuseSettings & s)
{
  return {
    {"iou_threshold", s.clustering.iou_threshold},
    {"bin_threshold", s.clustering.bin_threshold},
    {"ordering", s.clustering.ordering == ClusterOrdering::kByConfidenceDesc ? "by-confidence-desc" : "by-input-order"},
    {"linkage", s.clustering.linkage == ClusterLinkage::kRepresentative ? "representative" : "first-member"},
    {"one_per_pass", s.clustering.one_per_pass},
    {"resampling", s.clustering.resampling == Resampling::kBilinear ? "bilinear" : "nearest"},
    {"avg_denominator", s.fusion.denominator == AveragingDenominator::kMemberCount ? "k" : "M"}};
}

FuseSettings fuse_settings_from_json(const json & doc)
{
  FuseSettings s;
  const std::string path = "$.fuse_config";
  auto str = [&](const char * key) {
    const json & v = field(doc, key, path);
    if (!v.is_string()) {
      schema_error(path + "." + key, "expected a string");
    }
    return v.get<std::string>();
  };
  s.clustering.iou_threshold = as_number(field(doc, "iou_threshold", path), path + ".iou_threshold");
  s.clustering.bin_threshold = as_number(field(doc, "bin_threshold", path), path + ".bin_threshold");
  s.clustering.ordering = str("ordering") == "by-input-order" ? ClusterOrdering::kByInputOrder : ClusterOrdering::kByConfidenceDesc;
  s.clustering.linkage = str("linkage") == "first-member" ? ClusterLinkage::kFirstMember : ClusterLinkage::kRepresentative;
  s.clustering.one_per_pass = field(doc, "one_per_pass", path).get<bool>();
  s.clustering.resampling = str("resampling") == "nearest" ? Resampling::kNearest : Resampling::kBilinear;
  s.fusion.resampling = s.clustering.resampling;
  s.fusion.denominator = str("avg_denominator") == "M" ? AveragingDenominator::kPassCount : AveragingDenominator::kMemberCount;
  return s;
}

json observations_to_json(const ObservationSet & set)
{
  std::vector<const FrameObservations *> frames;
  for (const auto & f : set.frames) {
    frames.push_back(&f);
  }
  std::stable_sort(frames.begin(), frames.end(), [](auto * a, auto * b) { return a->frame_id < b->frame_id; });

  json jframes = json::array();
  for (const FrameObservations * f : frames) {
    json obs = json::array();
    for (const Observation & o : f->observations) {
      obs.push_back(
        {{"bbox", bbox_to_json(o.bbox_mean)},
         {"class_probs", rounded(o.class_probs_mean.values())},
         {"k", o.k},
         {"mask", mask_to_json(o.mask_mean)},
         {"uncertainty",
          {{"semantic_epistemic", round_sig9(o.uncertainty.semantic_epistemic)},
           {"semantic_aleatoric", round_sig9(o.uncertainty.semantic_aleatoric)},
           {"spatial_epistemic", patch_values(o.uncertainty.spatial_epistemic)},
           {"spatial_aleatoric", patch_values(o.uncertainty.spatial_aleatoric)}}}});
    }
    jframes.push_back({{"frame_id", f->frame_id}, {"passes", f->passes}, {"observations", std::move(obs)}});
  }
  json doc{
    {"version", kFormatVersion},
    {"classes", set.classes},
    {"background_class", set.background_class},
    {"image_extent", json::array({set.extent.rows, set.extent.cols})},
    {"fuse_config", fuse_settings_to_json(set.settings)},
    {"frames", std::move(jframes)}};
  if (!set.source.is_null()) {
    doc["source"] = set.source;
  }
  return doc;
}

ObservationSet observations_from_json(const json & doc)
{
  check_version(doc);
  ObservationSet set;
  set.classes = classes_from_json(doc);
  set.background_class = background_from_json(doc);
  set.extent = extent_from_json(field(doc, "image_extent", "$"), "$.image_extent");
  set.settings = fuse_settings_from_json(field(doc, "fuse_config", "$"));
  if (const auto it = doc.find("source"); it != doc.end()) {
    set.source = *it;
  }
  const std::size_t dim = set.prob_dim();
  const json & frames = array_at(doc, "frames", "$");
  std::vector<std::string> ids;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const std::string fpath = "$.frames[" + std::to_string(fi) + "]";
    const json & jf = frames[fi];
    FrameObservations fo;
    const json & id = field(jf, "frame_id", fpath);
    if (!id.is_string()) {
      schema_error(fpath + ".frame_id", "expected a string");
    }
    fo.frame_id = id.get<std::string>();
    fo.passes = static_cast<std::size_t>(as_int(field(jf, "passes", fpath), fpath + ".passes"));
    ids.push_back(fo.frame_id);
    const json & jobs = array_at(jf, "observations", fpath);
    for (std::size_t oi = 0; oi < jobs.size(); ++oi) {
      const std::string opath = fpath + ".observations[" + std::to_string(oi) + "]";
      const json & jo = jobs[oi];
      Observation o;
      o.bbox_mean = bbox_from_json(field(jo, "bbox", opath), opath + ".bbox");
      o.class_probs_mean = probs_from_json(field(jo, "class_probs", opath), dim, opath + ".class_probs");
      o.k = static_cast<std::size_t>(as_int(field(jo, "k", opath), opath + ".k"));
      o.mask_mean = mask_from_json(field(jo, "mask", opath), opath + ".mask");
      if (o.mask_mean.footprint_rows != o.mask_mean.grid.rows() || o.mask_mean.footprint_cols != o.mask_mean.grid.cols()) {
        schema_error(opath + ".mask", "observation heatmaps must use identity placement");
      }
      const json & ju = field(jo, "uncertainty", opath);
      const std::string upath = opath + ".uncertainty";
      o.uncertainty.semantic_epistemic = as_number(field(ju, "semantic_epistemic", upath), upath + ".semantic_epistemic");
      o.uncertainty.semantic_aleatoric = as_number(field(ju, "semantic_aleatoric", upath), upath + ".semantic_aleatoric");
      if (o.uncertainty.semantic_epistemic < 0.0 || o.uncertainty.semantic_aleatoric < 0.0) {
        schema_error(upath, "semantic variances must be non-negative");
      }
      const Window win = o.mask_mean.footprint();
      o.uncertainty.spatial_epistemic = patch_from_json(field(ju, "spatial_epistemic", upath), win, upath + ".spatial_epistemic");
      o.uncertainty.spatial_aleatoric = patch_from_json(field(ju, "spatial_aleatoric", upath), win, upath + ".spatial_aleatoric");
      fo.observations.push_back(std::move(o));
    }
    set.frames.push_back(std::move(fo));
  }
  check_unique_ids(ids, "$.frames");
  return set;
}

}  // namespace affuq
