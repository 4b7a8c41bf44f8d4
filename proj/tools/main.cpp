#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "arctext/evaluation.hpp"
#include "arctext/inter.hpp"
#include "arctext/intra.hpp"
#include "arctext/io.hpp"
#include "arctext/pseudo_label.hpp"
#include "arctext/suppress.hpp"

namespace fs = std::filesystem;
using namespace arctext;

namespace {

enum Exit { kOk = 0, kFailure = 1, kParseExit = 2, kIdExit = 3, kParamsExit = 4, kShapeExit = 5 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return kParseExit;
    case ErrorCode::kIdMismatch: return kIdExit;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kDegenerateGeometry: return kParamsExit;
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kEmptyProposalSet: return kShapeExit;
    case ErrorCode::kIo: return kFailure;
  }
  return kFailure;
}

const std::map<std::string, IouMode> kIouModes{{"mask", IouMode::kMask}, {"box", IouMode::kBox}};

const std::map<std::string, SuppressMode> kSuppressModes{{"soft-linear", SuppressMode::kSoftLinear},
                                                         {"soft-gaussian", SuppressMode::kSoftGaussian},
                                                         {"hard", SuppressMode::kHard}};

DetectionSet load_detections(const std::string& path) {
  return io::read_detection_set(io::read_text_file(path));
}

// Relative config paths that do not exist are looked up under
// $ARCTEXT_CONFIG_DIR.
fs::path resolve_config(const std::string& name) {
  fs::path p(name);
  if (fs::exists(p) || p.is_absolute()) return p;
  if (const char* dir = std::getenv("ARCTEXT_CONFIG_DIR")) {
    fs::path candidate = fs::path(dir) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return p;
}

nlohmann::json load_config(const std::string& path) {
  const std::string text = io::read_text_file(resolve_config(path));
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
}

std::string module_of(const std::string& flag, const nlohmann::json& config) {
  if (!flag.empty()) return flag;
  if (config.is_object() && config.contains("module") && config["module"].is_string())
    return config["module"].get<std::string>();
  throw Error(ErrorCode::kInvalidConfig, "pass --module or set \"module\" in the config");
}

void print_fusion(const char* roles, const FusionOutcome& o) {
  std::printf("%s labels=%zu triple=%zu pair-b=%zu pair-c=%zu dropped=%zu\n", roles,
              o.labels.size(), o.triples, o.pairs_b, o.pairs_c, o.dropped);
}

struct FuseArgs {
  std::string a, b, c, out, iou_mode = "mask";
  double threshold = 0.8, alpha = 0.5;
  bool rotate = false;
};

int cmd_fuse(const FuseArgs& args) {
  const DetectionSet a = load_detections(args.a);
  const DetectionSet b = load_detections(args.b);
  const DetectionSet c = load_detections(args.c);
  for (const DetectionSet* s : {&b, &c}) {
    require(s->image_id == a.image_id, ErrorCode::kIdMismatch,
            "image id '" + s->image_id + "' does not match '" + a.image_id + "'");
    require(s->width == a.width && s->height == a.height, ErrorCode::kShapeMismatch,
            "detection files of image '" + a.image_id + "' disagree on the image size");
  }
  FusionConfig config{args.threshold, args.alpha, kIouModes.at(args.iou_mode)};
  config.validate();

  const FusionOutcome outcome = fuse_detections(a.detections, b.detections, c.detections, config);
  print_fusion("A,B,C", outcome);
  if (args.rotate) {
    print_fusion("B,C,A", fuse_detections(b.detections, c.detections, a.detections, config));
    print_fusion("C,A,B", fuse_detections(c.detections, a.detections, b.detections, config));
  }
  io::write_text_file(args.out, io::write_label_set({a.image_id, a.width, a.height, outcome.labels}));
  return kOk;
}

struct NmsArgs {
  std::vector<std::string> inputs;
  std::string out, mode = "soft-linear", iou_mode = "mask";
  double threshold = 0.5, sigma = 0.5, floor = 0.001;
};

int cmd_nms(const NmsArgs& args) {
  SuppressConfig config{kSuppressModes.at(args.mode), args.threshold, args.sigma, args.floor,
                        kIouModes.at(args.iou_mode)};
  config.validate();
  std::vector<DetectionSet> sets;
  std::size_t total = 0;
  for (const auto& path : args.inputs) {
    sets.push_back(rescale_to_original(load_detections(path)));
    total += sets.back().detections.size();
  }
  const DetectionSet merged = multi_scale_aggregate(sets, config);
  std::printf("image=%s inputs=%zu detections=%zu kept=%zu\n", merged.image_id.c_str(),
              sets.size(), total, merged.detections.size());
  io::write_text_file(args.out, io::write_detection_set(merged));
  return kOk;
}

struct EvalArgs {
  std::vector<std::string> gt, det;
  std::string report;
  double iou = 0.5;
};

int cmd_eval(const EvalArgs& args) {
  std::map<std::string, GroundTruthSet> truth;
  for (const auto& path : args.gt) {
    GroundTruthSet g = io::read_ground_truth(io::read_text_file(path));
    require(!truth.count(g.image_id), ErrorCode::kIdMismatch,
            "ground truth for image '" + g.image_id + "' given twice");
    truth.emplace(g.image_id, std::move(g));
  }
  std::map<std::string, DetectionSet> dets;
  for (const auto& path : args.det) {
    DetectionSet d = load_detections(path);
    require(truth.count(d.image_id), ErrorCode::kIdMismatch,
            "detections for image '" + d.image_id + "' have no ground truth");
    require(!dets.count(d.image_id), ErrorCode::kIdMismatch,
            "detections for image '" + d.image_id + "' given twice");
    dets.emplace(d.image_id, std::move(d));
  }
  std::vector<ImageMatching> images;
  for (const auto& [id, g] : truth) {
    const auto it = dets.find(id);
    require(it != dets.end(), ErrorCode::kIdMismatch, "no detections for image '" + id + "'");
    images.push_back(match_detections(g, it->second, args.iou));
  }
  const EvalReport report = evaluate(images);
  std::fputs(io::format_report_table(report).c_str(), stdout);
  io::write_text_file(args.report, io::write_report(report));
  return kOk;
}

struct ForwardArgs {
  std::string module, weights, input, out;
};

int cmd_forward(const ForwardArgs& args) {
  const std::string weights_text = io::read_text_file(args.weights);
  const std::string kind = io::module_kind(weights_text);
  require(args.module.empty() || args.module == kind, ErrorCode::kShapeMismatch,
          "weights are for the " + kind + " module, not " + args.module);
  const io::TensorMap input = io::read_tensors(io::read_text_file(args.input));
  auto tensor = [&input](const std::string& name) -> const Tensor& {
    const auto it = input.find(name);
    require(it != input.end(), ErrorCode::kShapeMismatch, "input lacks tensor '" + name + "'");
    return it->second;
  };

  Tensor y;
  if (kind == "intra") {
    const intra::Module module = io::read_intra_module(weights_text);
    y = intra::forward(tensor("x"), module);
  } else {
    const inter::Module module = io::read_inter_module(weights_text);
    std::vector<Tensor> pyramid;
    for (std::size_t l = 0; l < module.config.pyramid_channels.size(); ++l)
      pyramid.push_back(tensor("pyramid." + std::to_string(l)));
    y = inter::forward(tensor("rois"), pyramid, module);
  }
  std::printf("shape %s\n", shape_string(y.shape()).c_str());
  io::write_text_file(args.out, io::write_tensors({{"y", y}}));
  return kOk;
}

struct ParamsArgs {
  std::string module, config;
};

void row(const std::string& name, std::size_t count) {
  std::printf("%-28s %12zu\n", name.c_str(), count);
}

int cmd_params(const ParamsArgs& args) {
  const nlohmann::json j = args.config.empty() ? nlohmann::json::object() : load_config(args.config);
  const std::string kind = module_of(args.module, j);
  auto header = [] { std::printf("%-28s %12s\n", "component", "parameters"); };
  if (kind == "intra") {
    const intra::Config c = io::intra_config_from_json(j);
    header();
    for (std::size_t b = 0; b < 3; ++b) {
      const std::size_t k = c.blocks[b].kernel, ch = c.blocks[b].channels;
      row("block " + std::to_string(b) + " (k=" + std::to_string(k) + ")",
          (2 * k + k * k) * ch * ch + 3 * ch);
    }
    row("total", intra::parameter_count(c));
  } else if (kind == "inter") {
    const inter::Config c = io::inter_config_from_json(j);
    header();
    const inter::Module zero = inter::Module::zeros(c);
    row("reduce", zero.reduce.parameter_count());
    for (std::size_t i = 0; i < zero.layers.size(); ++i) {
      std::size_t n = 0;
      for (const auto& [name, t] : io::module_tensors(zero))
        if (name.rfind("layers." + std::to_string(i) + ".", 0) == 0) n += t.size();
      row("encoder layer " + std::to_string(i), n);
    }
    row("recover", zero.recover.parameter_count());
    for (std::size_t l = 0; l < zero.context.size(); ++l)
      row("context " + std::to_string(l), zero.context[l].parameter_count());
    row("total", inter::parameter_count(c));
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown module '" + kind + "'");
  }
  return kOk;
}

struct InitArgs {
  std::string module, config, out;
  std::uint64_t seed = 0;
  bool zero = false;
};

int cmd_init(const InitArgs& args) {
  const nlohmann::json j = args.config.empty() ? nlohmann::json::object() : load_config(args.config);
  const std::string kind = module_of(args.module, j);
  std::string text;
  if (kind == "intra") {
    const intra::Config c = io::intra_config_from_json(j);
    text = io::write_intra_module(args.zero ? intra::Module::zeros(c) : intra::Module::random(c, args.seed));
  } else if (kind == "inter") {
    const inter::Config c = io::inter_config_from_json(j);
    text = io::write_inter_module(args.zero ? inter::Module::zeros(c) : inter::Module::random(c, args.seed));
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown module '" + kind + "'");
  }
  io::write_text_file(args.out, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arctext: text-instance fusion, suppression, evaluation and module reference"};
  app.require_subcommand(1);
  int status = kOk;

  FuseArgs fuse;
  auto* f = app.add_subcommand("fuse", "fuse three models' detections into weighted pseudo labels");
  f->add_option("--det-a", fuse.a, "anchor model detections")->required();
  f->add_option("--det-b", fuse.b, "second model detections")->required();
  f->add_option("--det-c", fuse.c, "third model detections")->required();
  f->add_option("--iou-threshold", fuse.threshold, "match threshold")->capture_default_str();
  f->add_option("--alpha", fuse.alpha, "weight decay for pair matches")->capture_default_str();
  f->add_option("--iou-mode", fuse.iou_mode)->check(CLI::IsMember({"mask", "box"}))->capture_default_str();
  f->add_flag("--rotate-roles", fuse.rotate, "also report the outcomes with B and C as anchor");
  f->add_option("--out", fuse.out, "weighted label file")->required();
  f->callback([&] { status = cmd_fuse(fuse); });

  NmsArgs nms;
  auto* n = app.add_subcommand("nms", "aggregate detection files and suppress duplicates");
  n->add_option("--in", nms.inputs, "detection files (any scale)")->required();
  n->add_option("--mode", nms.mode)
      ->check(CLI::IsMember({"soft-linear", "soft-gaussian", "hard"}))
      ->capture_default_str();
  n->add_option("--iou-threshold", nms.threshold)->capture_default_str();
  n->add_option("--sigma", nms.sigma)->capture_default_str();
  n->add_option("--score-floor", nms.floor)->capture_default_str();
  n->add_option("--iou-mode", nms.iou_mode)->check(CLI::IsMember({"mask", "box"}))->capture_default_str();
  n->add_option("--out", nms.out)->required();
  n->callback([&] { status = cmd_nms(nms); });

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "recall, precision and F-measure against ground truth");
  e->add_option("--gt", eval.gt, "ground-truth files")->required();
  e->add_option("--det", eval.det, "detection files, paired by imageId")->required();
  e->add_option("--iou", eval.iou, "match threshold")->capture_default_str();
  e->add_option("--report", eval.report, "report JSON")->required();
  e->callback([&] { status = cmd_eval(eval); });

  ForwardArgs forward;
  auto* fw = app.add_subcommand("forward", "run a module forward pass on a tensor file");
  fw->add_option("--module", forward.module)->check(CLI::IsMember({"intra", "inter"}));
  fw->add_option("--weights", forward.weights)->required();
  fw->add_option("--input", forward.input)->required();
  fw->add_option("--out", forward.out)->required();
  fw->callback([&] { status = cmd_forward(forward); });

  ParamsArgs params;
  auto* p = app.add_subcommand("params", "parameter count of a module configuration");
  p->add_option("--module", params.module)->check(CLI::IsMember({"intra", "inter"}));
  p->add_option("--config", params.config, "config JSON; defaults when omitted");
  p->callback([&] { status = cmd_params(params); });

  InitArgs init;
  auto* in = app.add_subcommand("init", "write a weights file for a configuration");
  in->add_option("--module", init.module)->check(CLI::IsMember({"intra", "inter"}));
  in->add_option("--config", init.config);
  in->add_option("--seed", init.seed)->capture_default_str();
  in->add_flag("--zero", init.zero, "all weights zero (layer-norm gains one)");
  in->add_option("--out", init.out)->required();
  in->callback([&] { status = cmd_init(init); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kParamsExit;
  } catch (const Error& ex) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(ex.code()), ex.what());
    return exit_code(ex.code());
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kFailure;
  }
  return status;
}
