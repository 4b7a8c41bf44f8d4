#include "arctext/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace arctext::io {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::kParse, what); }

// Runs a parser body, mapping JSON library failures and invalid geometry to
// parse errors.
template <typename F>
auto parsing(F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    parse_fail(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateGeometry || e.code() == ErrorCode::kInvalidArgument)
      parse_fail(e.what());
    throw;
  }
}

json parse_document(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(e.what());
  }
  if (!j.is_object()) parse_fail("document is not a JSON object");
  const auto it = j.find("schemaVersion");
  if (it == j.end() || !it->is_string() || it->get<std::string>() != kSchemaVersion)
    parse_fail("missing or unsupported schemaVersion (expected \"1\")");
  return j;
}

std::string dump(const json& j, bool pretty) { return (pretty ? j.dump(2) : j.dump()) + "\n"; }

int positive_int(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() <= 0)
    parse_fail(std::string(key) + " must be a positive integer");
  return v.get<int>();
}

double finite(const json& v, const char* what) {
  if (!v.is_number()) parse_fail(std::string(what) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_fail(std::string(what) + " must be finite");
  return d;
}

json points_to_json(const Polygon& p) {
  json pts = json::array();
  for (const auto& v : p.vertices()) pts.push_back({v.x, v.y});
  return pts;
}

Polygon polygon_from_json(const json& j) {
  if (!j.is_array()) parse_fail("polygon must be an array of [x, y] pairs");
  std::vector<Point> pts;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) parse_fail("polygon vertex must be [x, y]");
    pts.push_back({finite(p[0], "polygon x"), finite(p[1], "polygon y")});
  }
  return Polygon(std::move(pts));
}

json box_to_json(const AxisBox& b) { return {b.xmin, b.ymin, b.xmax, b.ymax}; }

AxisBox box_from_json(const json& j, int width, int height) {
  if (!j.is_array() || j.size() != 4) parse_fail("box must be [xmin, ymin, xmax, ymax]");
  AxisBox b{finite(j[0], "box"), finite(j[1], "box"), finite(j[2], "box"), finite(j[3], "box")};
  b.validate();
  if (b.xmin < -1.0 || b.ymin < -1.0 || b.xmax > width + 1.0 || b.ymax > height + 1.0)
    parse_fail("box lies outside the image");
  return b;
}

json mask_to_json(const BitMask& m) {
  return {{"width", m.width()}, {"height", m.height()}, {"counts", rle_encode(m)}};
}

BitMask mask_from_json(const json& j, int width, int height) {
  const int w = positive_int(j, "width");
  const int h = positive_int(j, "height");
  if (w != width || h != height)
    parse_fail("mask is " + std::to_string(w) + "x" + std::to_string(h) + ", image is " +
               std::to_string(width) + "x" + std::to_string(height));
  return rle_decode(w, h, j.at("counts").get<std::vector<std::uint64_t>>());
}

ScoredDetection detection_from_json(const json& d, int width, int height, const char* score_key) {
  ScoredDetection det;
  det.score = finite(d.at(score_key), score_key);
  if (d.contains("polygon")) det.outline = polygon_from_json(d["polygon"]);
  if (d.contains("mask")) {
    det.mask = mask_from_json(d["mask"], width, height);
  } else if (det.outline) {
    det.mask = polygon_to_mask(*det.outline, width, height);
  } else {
    parse_fail("detection needs a polygon or a mask");
  }
  if (d.contains("box")) {
    det.box = box_from_json(d["box"], width, height);
  } else if (det.outline) {
    det.box = bounding_box(*det.outline);
  } else if (auto b = det.mask.bounds()) {
    det.box = *b;
  } else {
    parse_fail("detection without box has an empty mask");
  }
  det.validate();
  return det;
}

LabelSet labels_from_json(const json& j) {
  LabelSet set;
  set.image_id = j.at("imageId").get<std::string>();
  set.width = positive_int(j, "imageWidth");
  set.height = positive_int(j, "imageHeight");
  for (const auto& l : j.at("labels")) {
    PseudoLabel label;
    label.weight = finite(l.at("weight"), "weight");
    if (label.weight < 0.0 || label.weight > 1.0) parse_fail("label weight must lie in [0, 1]");
    label.mask = mask_from_json(l.at("mask"), set.width, set.height);
    label.box = box_from_json(l.at("box"), set.width, set.height);
    for (const auto& p : l.value("polygons", json::array())) (void)polygon_from_json(p);
    set.labels.push_back(std::move(label));
  }
  return set;
}

void expect_kind(const json& j, std::string_view kind) {
  if (j.value("kind", std::string(kind)) != kind)
    parse_fail("expected a '" + std::string(kind) + "' document, got '" +
               j["kind"].get<std::string>() + "'");
}

json tensor_map_to_json(const TensorMap& tensors) {
  json out = json::object();
  for (const auto& [name, t] : tensors)
    out[name] = {{"shape", t.shape()},
                 {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  return out;
}

TensorMap tensor_map_from_json(const json& j, bool checksum_required) {
  TensorMap tensors;
  for (const auto& [name, t] : j.at("tensors").items()) {
    auto shape = t.at("shape").get<Tensor::Shape>();
    auto data = t.at("data").get<std::vector<double>>();
    try {
      tensors.emplace(name, Tensor(std::move(shape), std::move(data)));
    } catch (const Error& e) {
      parse_fail("tensor '" + name + "': " + e.what());
    }
  }
  if (j.contains("checksum")) {
    if (j["checksum"].get<std::string>() != checksum(tensors))
      parse_fail("tensor checksum does not match content");
  } else if (checksum_required) {
    parse_fail("weights file has no checksum");
  }
  return tensors;
}

[[noreturn]] void config_fail(const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, what);
}

std::size_t config_size(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_number_integer() || v.get<long long>() < 0)
    config_fail(std::string(key) + " must be a non-negative integer");
  return v.get<std::size_t>();
}

std::pair<std::size_t, std::size_t> config_pair(const json& j, const char* key,
                                                std::size_t fh, std::size_t fw) {
  if (!j.contains(key)) return {fh, fw};
  const json& v = j[key];
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer() || v[0].get<long long>() < 0 || v[1].get<long long>() < 0)
    config_fail(std::string(key) + " must be [height, width]");
  return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
}

void allow_keys(const json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_fail("config must be a JSON object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) config_fail("unknown config key '" + k + "'");
}

intra::Activation activation_from(const json& v) {
  if (!v.is_string()) config_fail("activation must be \"none\" or \"relu\"");
  const auto s = v.get<std::string>();
  if (s == "none") return intra::Activation::kNone;
  if (s == "relu") return intra::Activation::kRelu;
  config_fail("activation must be \"none\" or \"relu\", got '" + s + "'");
}

const char* activation_name(intra::Activation a) {
  return a == intra::Activation::kRelu ? "relu" : "none";
}

const Tensor& fetch(const TensorMap& tensors, const std::string& name,
                    const Tensor::Shape& shape, std::set<std::string>& seen) {
  const auto it = tensors.find(name);
  require(it != tensors.end(), ErrorCode::kShapeMismatch, "weights lack tensor '" + name + "'");
  require(it->second.shape() == shape, ErrorCode::kShapeMismatch,
          "tensor '" + name + "' has shape " + shape_string(it->second.shape()) +
              ", config requires " + shape_string(shape));
  seen.insert(name);
  return it->second;
}

Conv2dKernel fetch_conv(const TensorMap& tensors, const std::string& name, std::size_t out,
                        std::size_t in, std::size_t kh, std::size_t kw,
                        std::set<std::string>& seen) {
  return Conv2dKernel(fetch(tensors, name + ".weight", {out, in, kh, kw}, seen),
                      fetch(tensors, name + ".bias", {out}, seen));
}

void reject_extra(const TensorMap& tensors, const std::set<std::string>& seen) {
  for (const auto& [name, t] : tensors)
    require(seen.count(name) == 1, ErrorCode::kShapeMismatch,
            "weights contain unexpected tensor '" + name + "'");
}

void put_conv(TensorMap& m, const std::string& name, const Conv2dKernel& k) {
  m[name + ".weight"] = k.weights;
  m[name + ".bias"] = k.bias;
}

template <typename Config>
std::string write_module_document(const char* kind, const Config& config,
                                  const TensorMap& tensors) {
  json j = {{"schemaVersion", kSchemaVersion},
            {"kind", kind},
            {"config", config_to_json(config)},
            {"tensors", tensor_map_to_json(tensors)},
            {"checksum", checksum(tensors)}};
  return dump(j, false);
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

std::vector<std::uint64_t> rle_encode(const BitMask& mask) {
  std::vector<std::uint64_t> counts;
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (std::uint8_t b : mask.bits()) {
    if (b != current) {
      counts.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

BitMask rle_decode(int width, int height, const std::vector<std::uint64_t>& counts) {
  const auto total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  std::vector<std::uint8_t> bits;
  bits.reserve(total);
  std::uint8_t value = 0;
  for (std::uint64_t run : counts) {
    if (bits.size() + run > total) parse_fail("mask run lengths exceed width * height");
    bits.insert(bits.end(), run, value);
    value ^= 1;
  }
  if (bits.size() != total) parse_fail("mask run lengths do not cover width * height");
  return BitMask(width, height, std::move(bits));
}

std::string write_detection_set(const DetectionSet& set) {
  json dets = json::array();
  for (const auto& d : set.detections) {
    json e = {{"box", box_to_json(d.box)}, {"score", d.score}, {"mask", mask_to_json(d.mask)}};
    if (d.outline) e["polygon"] = points_to_json(*d.outline);
    dets.push_back(std::move(e));
  }
  json j = {{"schemaVersion", kSchemaVersion}, {"kind", "detections"},
            {"imageId", set.image_id},         {"imageWidth", set.width},
            {"imageHeight", set.height},       {"sourceTag", set.source_tag},
            {"scaleFactor", set.scale_factor}, {"detections", std::move(dets)}};
  return dump(j, true);
}

DetectionSet read_detection_set(std::string_view text) {
  return parsing([&] {
    const json j = parse_document(text);
    const std::string kind = j.value("kind", std::string("detections"));
    DetectionSet set;
    if (kind == "weighted-labels") {
      LabelSet labels = labels_from_json(j);
      set.image_id = labels.image_id;
      set.source_tag = j.value("sourceTag", std::string("weighted-labels"));
      set.width = labels.width;
      set.height = labels.height;
      for (auto& l : labels.labels)
        set.detections.push_back({std::move(l.mask), l.box, l.weight, std::nullopt});
      return set;
    }
    if (kind != "detections") parse_fail("expected a detections document, got '" + kind + "'");
    set.image_id = j.at("imageId").get<std::string>();
    set.width = positive_int(j, "imageWidth");
    set.height = positive_int(j, "imageHeight");
    set.source_tag = j.value("sourceTag", std::string());
    set.scale_factor = j.contains("scaleFactor") ? finite(j["scaleFactor"], "scaleFactor") : 1.0;
    if (set.scale_factor <= 0.0) parse_fail("scaleFactor must be positive");
    for (const auto& d : j.at("detections"))
      set.detections.push_back(detection_from_json(d, set.width, set.height, "score"));
    return set;
  });
}

std::string write_label_set(const LabelSet& labels) {
  json items = json::array();
  for (const auto& l : labels.labels) {
    json polys = json::array();
    for (const auto& p : mask_to_polygons(l.mask)) polys.push_back(points_to_json(p));
    items.push_back({{"box", box_to_json(l.box)},
                     {"weight", l.weight},
                     {"mask", mask_to_json(l.mask)},
                     {"polygons", std::move(polys)}});
  }
  json j = {{"schemaVersion", kSchemaVersion}, {"kind", "weighted-labels"},
            {"imageId", labels.image_id},      {"imageWidth", labels.width},
            {"imageHeight", labels.height},    {"labels", std::move(items)}};
  return dump(j, true);
}

LabelSet read_label_set(std::string_view text) {
  return parsing([&] {
    const json j = parse_document(text);
    expect_kind(j, "weighted-labels");
    return labels_from_json(j);
  });
}

std::string write_ground_truth(const GroundTruthSet& gt) {
  gt.validate();
  json items = json::array();
  for (std::size_t i = 0; i < gt.instances.size(); ++i)
    items.push_back({{"polygon", points_to_json(gt.instances[i])}, {"ignore", gt.ignore[i]}});
  json j = {{"schemaVersion", kSchemaVersion}, {"kind", "ground-truth"},
            {"imageId", gt.image_id},          {"imageWidth", gt.width},
            {"imageHeight", gt.height},        {"instances", std::move(items)}};
  return dump(j, true);
}

GroundTruthSet read_ground_truth(std::string_view text) {
  return parsing([&] {
    const json j = parse_document(text);
    expect_kind(j, "ground-truth");
    GroundTruthSet gt;
    gt.image_id = j.at("imageId").get<std::string>();
    gt.width = positive_int(j, "imageWidth");
    gt.height = positive_int(j, "imageHeight");
    for (const auto& inst : j.at("instances")) {
      gt.instances.push_back(polygon_from_json(inst.at("polygon")));
      gt.ignore.push_back(inst.value("ignore", false));
    }
    return gt;
  });
}

std::string write_report(const EvalReport& r) {
  json matches = json::array();
  for (const auto& [image, m] : r.matched_pairs)
    matches.push_back({{"imageId", image}, {"gt", m.gt}, {"det", m.det}, {"iou", m.iou}});
  json images = json::array();
  for (const auto& im : r.per_image)
    images.push_back({{"imageId", im.image_id},
                      {"truePositives", im.true_positives},
                      {"gtCount", im.gt_count},
                      {"detCount", im.det_count},
                      {"recall", im.recall},
                      {"precision", im.precision},
                      {"fMeasure", im.f_measure}});
  json j = {{"schemaVersion", kSchemaVersion},
            {"kind", "evaluation-report"},
            {"recall", r.recall},
            {"precision", r.precision},
            {"fMeasure", r.f_measure},
            {"truePositives", r.true_positives},
            {"gtCount", r.gt_count},
            {"detCount", r.det_count},
            {"recallUndefined", r.recall_undefined},
            {"precisionUndefined", r.precision_undefined},
            {"matches", std::move(matches)},
            {"perImage", std::move(images)}};
  return dump(j, true);
}

std::string format_report_table(const EvalReport& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %6s %6s %6s %9s %9s %9s\n", "image", "gt", "det", "tp",
                "recall", "precision", "f-measure");
  out += line;
  for (const auto& im : r.per_image) {
    std::snprintf(line, sizeof line, "%-24s %6zu %6zu %6zu %9.4f %9.4f %9.4f\n",
                  im.image_id.c_str(), im.gt_count, im.det_count, im.true_positives, im.recall,
                  im.precision, im.f_measure);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-24s %6zu %6zu %6zu %9.4f %9.4f %9.4f\n", "all", r.gt_count,
                r.det_count, r.true_positives, r.recall, r.precision, r.f_measure);
  out += line;
  if (r.recall_undefined) out += "note: no cared-for ground truth; recall reported as 0\n";
  if (r.precision_undefined) out += "note: no counted detections; precision reported as 0\n";
  return out;
}

std::string checksum(const TensorMap& tensors) {
  std::uint64_t h = 14695981039346656037ull;
  auto byte = [&h](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  auto word = [&byte](std::uint64_t w) {
    for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(w >> (8 * i)));
  };
  for (const auto& [name, t] : tensors) {
    for (char c : name) byte(static_cast<std::uint8_t>(c));
    byte(0);
    word(t.rank());
    for (auto d : t.shape()) word(d);
    for (double v : t.data()) word(std::bit_cast<std::uint64_t>(v));
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::string write_tensors(const TensorMap& tensors) {
  json j = {{"schemaVersion", kSchemaVersion},
            {"kind", "tensors"},
            {"tensors", tensor_map_to_json(tensors)},
            {"checksum", checksum(tensors)}};
  return dump(j, false);
}

TensorMap read_tensors(std::string_view text) {
  return parsing([&] {
    const json j = parse_document(text);
    expect_kind(j, "tensors");
    return tensor_map_from_json(j, false);
  });
}

json config_to_json(const intra::Config& c) {
  json kernels = json::array(), acts = json::array();
  for (const auto& b : c.blocks) {
    kernels.push_back(b.kernel);
    acts.push_back(activation_name(b.activation));
  }
  return {{"module", "intra"},
          {"channels", c.blocks[0].channels},
          {"kernels", kernels},
          {"activation", acts},
          {"residual", c.residual}};
}

json config_to_json(const inter::Config& c) {
  json j{{"module", "inter"},
          {"channels", c.channels},
          {"reducedChannels", c.reduced_channels},
          {"roiSize", {c.roi_h, c.roi_w}},
          {"pooledSize", {c.pooled_h, c.pooled_w}},
          {"layers", c.layers},
          {"heads", c.heads},
          {"pyramidChannels", c.pyramid_channels}};
  // Zero means "derive from the model width"; leave it implicit.
  if (c.ffn_hidden != 0) j["ffnHidden"] = c.ffn_hidden;
  return j;
}

intra::Config intra_config_from_json(const json& j) {
  try {
    allow_keys(j, {"module", "channels", "kernels", "activation", "residual"});
    if (j.value("module", std::string("intra")) != "intra")
      config_fail("config is not for the intra module");
    intra::Config cfg = intra::Config::standard(config_size(j, "channels", 256));
    if (j.contains("kernels")) {
      const json& k = j["kernels"];
      if (!k.is_array() || k.size() != 3) config_fail("kernels must list exactly 3 extents");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!k[i].is_number_integer() || k[i].get<long long>() < 0)
          config_fail("kernel extents must be non-negative integers");
        cfg.blocks[i].kernel = k[i].get<std::size_t>();
      }
    }
    if (j.contains("activation")) {
      const json& a = j["activation"];
      if (a.is_array()) {
        if (a.size() != 3) config_fail("activation list must have 3 entries");
        for (std::size_t i = 0; i < 3; ++i) cfg.blocks[i].activation = activation_from(a[i]);
      } else {
        for (auto& b : cfg.blocks) b.activation = activation_from(a);
      }
    }
    if (j.contains("residual")) {
      if (!j["residual"].is_boolean()) config_fail("residual must be a boolean");
      cfg.residual = j["residual"].get<bool>();
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    config_fail(e.what());
  }
}

inter::Config inter_config_from_json(const json& j) {
  try {
    allow_keys(j, {"module", "channels", "reducedChannels", "roiSize", "pooledSize", "layers",
                   "heads", "ffnHidden", "pyramidChannels"});
    if (j.value("module", std::string("inter")) != "inter")
      config_fail("config is not for the inter module");
    inter::Config cfg;
    cfg.channels = config_size(j, "channels", cfg.channels);
    cfg.reduced_channels = config_size(j, "reducedChannels", cfg.reduced_channels);
    std::tie(cfg.roi_h, cfg.roi_w) = config_pair(j, "roiSize", cfg.roi_h, cfg.roi_w);
    std::tie(cfg.pooled_h, cfg.pooled_w) = config_pair(j, "pooledSize", cfg.pooled_h, cfg.pooled_w);
    cfg.layers = config_size(j, "layers", cfg.layers);
    cfg.heads = config_size(j, "heads", cfg.heads);
    cfg.ffn_hidden = config_size(j, "ffnHidden", 0);
    if (j.contains("pyramidChannels")) {
      const json& p = j["pyramidChannels"];
      if (!p.is_array()) config_fail("pyramidChannels must be an array");
      cfg.pyramid_channels.clear();
      for (const auto& c : p) {
        if (!c.is_number_integer() || c.get<long long>() < 0)
          config_fail("pyramid channels must be non-negative integers");
        cfg.pyramid_channels.push_back(c.get<std::size_t>());
      }
    } else {
      cfg.pyramid_channels.assign(4, cfg.channels);
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    config_fail(e.what());
  }
}

TensorMap module_tensors(const intra::Module& module) {
  TensorMap m;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    put_conv(m, p + "vertical", module.blocks[b].vertical);
    put_conv(m, p + "horizontal", module.blocks[b].horizontal);
    put_conv(m, p + "square", module.blocks[b].square);
  }
  return m;
}

TensorMap module_tensors(const inter::Module& module) {
  TensorMap m;
  put_conv(m, "reduce", module.reduce);
  put_conv(m, "recover", module.recover);
  for (std::size_t i = 0; i < module.context.size(); ++i)
    put_conv(m, "context." + std::to_string(i), module.context[i]);
  for (std::size_t i = 0; i < module.layers.size(); ++i) {
    const auto& l = module.layers[i];
    const std::string p = "layers." + std::to_string(i) + ".";
    m[p + "query.weight"] = l.query_w;
    m[p + "query.bias"] = l.query_b;
    m[p + "key.weight"] = l.key_w;
    m[p + "key.bias"] = l.key_b;
    m[p + "value.weight"] = l.value_w;
    m[p + "value.bias"] = l.value_b;
    m[p + "out.weight"] = l.out_w;
    m[p + "out.bias"] = l.out_b;
    m[p + "norm1.gamma"] = l.norm1_gamma;
    m[p + "norm1.beta"] = l.norm1_beta;
    m[p + "ffn1.weight"] = l.ffn1_w;
    m[p + "ffn1.bias"] = l.ffn1_b;
    m[p + "ffn2.weight"] = l.ffn2_w;
    m[p + "ffn2.bias"] = l.ffn2_b;
    m[p + "norm2.gamma"] = l.norm2_gamma;
    m[p + "norm2.beta"] = l.norm2_beta;
  }
  return m;
}

intra::Module intra_module_from(const intra::Config& config, const TensorMap& tensors) {
  config.validate();
  std::set<std::string> seen;
  intra::Module m{config, {}};
  for (std::size_t b = 0; b < 3; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    const std::size_t c = config.blocks[b].channels, k = config.blocks[b].kernel;
    m.blocks[b].vertical = fetch_conv(tensors, p + "vertical", c, c, k, 1, seen);
    m.blocks[b].horizontal = fetch_conv(tensors, p + "horizontal", c, c, 1, k, seen);
    m.blocks[b].square = fetch_conv(tensors, p + "square", c, c, k, k, seen);
  }
  reject_extra(tensors, seen);
  m.validate();
  return m;
}

inter::Module inter_module_from(const inter::Config& config, const TensorMap& tensors) {
  config.validate();
  std::set<std::string> seen;
  const std::size_t c = config.channels, c0 = config.reduced_channels;
  const std::size_t d = config.d_model(), hid = config.hidden();
  inter::Module m;
  m.config = config;
  m.reduce = fetch_conv(tensors, "reduce", c0, c, 1, 1, seen);
  m.recover = fetch_conv(tensors, "recover", c, c0, 1, 1, seen);
  for (std::size_t i = 0; i < config.pyramid_channels.size(); ++i)
    m.context.push_back(fetch_conv(tensors, "context." + std::to_string(i), c,
                                   config.pyramid_channels[i], 1, 1, seen));
  for (std::size_t i = 0; i < config.layers; ++i) {
    const std::string p = "layers." + std::to_string(i) + ".";
    auto get = [&](const char* name, Tensor::Shape shape) {
      return fetch(tensors, p + name, shape, seen);
    };
    inter::EncoderLayer l;
    l.query_w = get("query.weight", {d, d});
    l.query_b = get("query.bias", {d});
    l.key_w = get("key.weight", {d, d});
    l.key_b = get("key.bias", {d});
    l.value_w = get("value.weight", {d, d});
    l.value_b = get("value.bias", {d});
    l.out_w = get("out.weight", {d, d});
    l.out_b = get("out.bias", {d});
    l.norm1_gamma = get("norm1.gamma", {d});
    l.norm1_beta = get("norm1.beta", {d});
    l.ffn1_w = get("ffn1.weight", {d, hid});
    l.ffn1_b = get("ffn1.bias", {hid});
    l.ffn2_w = get("ffn2.weight", {hid, d});
    l.ffn2_b = get("ffn2.bias", {d});
    l.norm2_gamma = get("norm2.gamma", {d});
    l.norm2_beta = get("norm2.beta", {d});
    m.layers.push_back(std::move(l));
  }
  reject_extra(tensors, seen);
  m.validate();
  return m;
}

std::string write_intra_module(const intra::Module& module) {
  return write_module_document("intra-weights", module.config, module_tensors(module));
}

std::string write_inter_module(const inter::Module& module) {
  return write_module_document("inter-weights", module.config, module_tensors(module));
}

intra::Module read_intra_module(std::string_view text) {
  const auto [config, tensors] = parsing([&] {
    const json j = parse_document(text);
    expect_kind(j, "intra-weights");
    return std::pair{intra_config_from_json(j.at("config")), tensor_map_from_json(j, true)};
  });
  return intra_module_from(config, tensors);
}

inter::Module read_inter_module(std::string_view text) {
  const auto [config, tensors] = parsing([&] {
    const json j = parse_document(text);
    expect_kind(j, "inter-weights");
    return std::pair{inter_config_from_json(j.at("config")), tensor_map_from_json(j, true)};
  });
  return inter_module_from(config, tensors);
}

std::string module_kind(std::string_view text) {
  return parsing([&] {
    const json j = parse_document(text);
    const std::string kind = j.value("kind", std::string());
    if (kind == "intra-weights") return std::string("intra");
    if (kind == "inter-weights") return std::string("inter");
    if (!kind.empty()) throw Error(ErrorCode::kParse, "expected a weights file, got kind \"" + kind + "\"");
    const std::string module = j.value("module", std::string());
    if (module == "intra" || module == "inter") return module;
    throw Error(ErrorCode::kInvalidConfig, "cannot tell which module the document configures");
  });
}

}  // namespace arctext::io
