#include "worldgen/pano/outpaint.hpp"

#include <filesystem>

#include "worldgen/core/image_ops.hpp"
#include "worldgen/core/io_pfm.hpp"
#include "worldgen/core/io_png.hpp"
#include "worldgen/core/rng.hpp"

namespace fs = std::filesystem;

namespace worldgen {

using nlohmann::json;

ImageF32 refine_blend(const ImageF32& base, const ImageF32& refined, const Mask& mask,
                      double feather_radius_px) {
  require(base.same_shape(refined), ErrorKind::Domain, "refine_blend: shape mismatch");
  require(mask.width() == base.width() && mask.height() == base.height(), ErrorKind::Domain,
          "refine_blend: mask mismatch");
  // Hard-composite first so pixels outside the mask can't drift even where
  // the blurred mask is nonzero.
  ImageF32 inside = base;
  for (int y = 0; y < base.height(); ++y)
    for (int x = 0; x < base.width(); ++x)
      if (mask.at(x, y))
        for (int c = 0; c < base.channels(); ++c) inside.at(x, y, c) = refined.at(x, y, c);
  ImageF32 soft = feather_mask(mask, feather_radius_px);
  // outside the mask base == inside, so b - a == 0 and the lerp is exact
  return lerp_images(base, inside, soft);
}

namespace {

struct Checkpointer {
  fs::path root;
  bool enabled = false;

  explicit Checkpointer(const std::string& dir) : root(dir), enabled(!dir.empty()) {
    if (enabled) fs::create_directories(root);
  }

  fs::path step_dir(int step) const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "step_%03d", step);
    return root / buf;
  }

  // index of the last completed step, or -1
  int last_done() const {
    if (!enabled) return -1;
    int last = -1;
    for (int k = 0;; ++k) {
      if (!fs::exists(step_dir(k) / "done.json")) break;
      last = k;
    }
    return last;
  }

  void save(int step, const json& meta, const EquirectPanorama& pano, const Mask& input_fp,
            const Mask& anchor_fp, const ImageF32* view, const Mask* view_mask,
            const ImageF32* result, const OutpaintResult& counts) const {
    if (!enabled) return;
    fs::path dir = step_dir(step);
    fs::create_directories(dir);
    write_png((dir / "pano.png").string(), to_u8(pano.rgb));
    write_png((dir / "pano_mask.png").string(), pano.fill);
    write_pfm((dir / "pano.pfm").string(), pano.rgb);
    write_png((dir / "input_footprint.png").string(), input_fp);
    write_png((dir / "anchor_footprint.png").string(), anchor_fp);
    if (view) write_png((dir / "view.png").string(), to_u8(*view));
    if (view_mask) write_png((dir / "mask.png").string(), *view_mask);
    if (result) write_png((dir / "result.png").string(), to_u8(*result));
    json plan = meta;
    std::string plan_s = plan.dump(2);
    write_file((dir / "plan.json").string(), plan_s.data(), plan_s.size());
    json done;
    done["step"] = step;
    done["inpaint_calls"] = counts.inpaint_calls;
    done["refine_calls"] = counts.refine_calls;
    done["anchor_actions"] = counts.anchor_actions;
    std::string done_s = done.dump(2);
    write_file((dir / "done.json").string(), done_s.data(), done_s.size());
  }

  void load(int step, EquirectPanorama& pano, Mask& input_fp, Mask& anchor_fp,
            OutpaintResult& counts) const {
    fs::path dir = step_dir(step);
    pano.rgb = read_pfm((dir / "pano.pfm").string());
    ImageU8 fill = read_png((dir / "pano_mask.png").string());
    require(fill.channels() == 1, ErrorKind::Io, "corrupt checkpoint: pano_mask");
    pano.fill = fill;
    input_fp = read_png((dir / "input_footprint.png").string());
    anchor_fp = read_png((dir / "anchor_footprint.png").string());
    auto done_bytes = read_file((dir / "done.json").string());
    json done = json::parse(done_bytes.begin(), done_bytes.end());
    counts.inpaint_calls = done.at("inpaint_calls").get<int>();
    counts.refine_calls = done.at("refine_calls").get<int>();
    counts.anchor_actions = done.at("anchor_actions").get<int>();
  }
};

json step_meta(int index, const PlanStep& s, const std::string& prompt) {
  json j;
  j["step"] = index;
  j["anchor"] = s.anchor == AnchorAction::PlaceBackside    ? "place_backside"
                : s.anchor == AnchorAction::RemoveBackside ? "remove_backside"
                                                           : "none";
  j["equirect_canvas"] = s.equirect_canvas;
  if (s.anchor == AnchorAction::None && !s.equirect_canvas) {
    j.update(camera_meta(s.pose, s.intr.fov_x, s.intr.fov_y));
    j["size"] = s.intr.width;
  }
  j["prompt"] = prompt;
  return j;
}

Mask invert_mask(const Mask& m) {
  Mask out(m.width(), m.height(), 1);
  for (size_t i = 0; i < m.count(); ++i) out.data()[i] = m.data()[i] ? 0 : kMaskOn;
  return out;
}

size_t count_on(const Mask& m) {
  size_t n = 0;
  for (size_t i = 0; i < m.count(); ++i) n += m.data()[i] ? 1 : 0;
  return n;
}

void zero_masked(ImageF32& img, const Mask& m) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (m.at(x, y))
        for (int c = 0; c < img.channels(); ++c) img.at(x, y, c) = 0.0f;
}

// AdHoc-style direct canvas composite: hard-write holes, feather into the
// filled surroundings, never touch protected pixels.
void composite_on_canvas(EquirectPanorama& pano, const ImageF32& result, const Mask& holes,
                         const Mask& protect, double feather_radius_px) {
  ImageF32 soft = feather_mask(holes, feather_radius_px);
  for (int y = 0; y < pano.height(); ++y)
    for (int x = 0; x < pano.width(); ++x) {
      if (protect.at(x, y)) continue;
      if (holes.at(x, y)) {
        for (int c = 0; c < 3; ++c) pano.rgb.at(x, y, c) = result.at(x, y, c);
        pano.fill.at(x, y) = kMaskOn;
      } else if (pano.fill.at(x, y)) {
        float w = std::min(1.0f, soft.at(x, y));
        if (w <= 0.0f) continue;
        for (int c = 0; c < 3; ++c) {
          float base = pano.rgb.at(x, y, c);
          pano.rgb.at(x, y, c) = base + w * (result.at(x, y, c) - base);
        }
      }
    }
}

}  // namespace

OutpaintResult run_outpaint(const ImageF32& input_view, const Intrinsics& input_K,
                            const PromptSet& prompts, HeuristicKind kind, OracleClient& oracle,
                            const OutpaintConfig& cfg) {
  input_K.validate();
  require(input_view.channels() == 3, ErrorKind::Domain, "input view must be rgb");
  require(input_view.width() == input_K.width && input_view.height() == input_K.height,
          ErrorKind::Domain, "input view does not match its intrinsics");
  require(!prompts.scene.empty(), ErrorKind::Config, "scene prompt must not be empty");
  if (kind != HeuristicKind::AdHoc)
    require(!prompts.sky.empty() && !prompts.ground.empty(), ErrorKind::Config,
            heuristic_to_string(kind) + " heuristic needs sky and ground prompts");

  ViewPlan plan = plan_views(kind, cfg.plan);
  Checkpointer ckpt(cfg.checkpoint_dir);

  OutpaintResult out;
  out.pano = EquirectPanorama::create(cfg.pano_width);
  out.input_footprint = Mask(cfg.pano_width, cfg.pano_width / 2, 1, 0);
  Mask anchor_footprint(cfg.pano_width, cfg.pano_width / 2, 1, 0);

  int resume_from = ckpt.last_done();
  if (resume_from >= 0) {
    ckpt.load(resume_from, out.pano, out.input_footprint, anchor_footprint, out);
  } else {
    // step -1 equivalent: the input itself
    Mask all(input_view.width(), input_view.height(), 1, kMaskOn);
    ProjectOptions opt;
    opt.feather_radius_px = cfg.feather_radius_px;
    opt.out_written = &out.input_footprint;
    project_view_to_pano(input_view, all, pose_from_angles(0.0, 0.0), input_K, out.pano, opt);
  }

  CameraPose backside_pose = pose_from_angles(kPi, 0.0);

  for (int i = 0; i < static_cast<int>(plan.steps.size()); ++i) {
    if (i <= resume_from) continue;
    const PlanStep& step = plan.steps[i];
    uint64_t step_seed = derive_seed(cfg.seed, 2 * static_cast<uint64_t>(i));

    if (step.anchor == AnchorAction::PlaceBackside) {
      Mask all(input_view.width(), input_view.height(), 1, kMaskOn);
      ProjectOptions opt;
      opt.feather_radius_px = cfg.feather_radius_px;
      opt.protect = &out.input_footprint;
      opt.out_written = &anchor_footprint;
      project_view_to_pano(input_view, all, backside_pose, input_K, out.pano, opt);
      out.anchor_actions++;
      ckpt.save(i, step_meta(i, step, ""), out.pano, out.input_footprint, anchor_footprint,
                nullptr, nullptr, nullptr, out);
      continue;
    }
    if (step.anchor == AnchorAction::RemoveBackside) {
      clear_region(out.pano, anchor_footprint);
      anchor_footprint.fill(0);
      out.anchor_actions++;
      ckpt.save(i, step_meta(i, step, ""), out.pano, out.input_footprint, anchor_footprint,
                nullptr, nullptr, nullptr, out);
      continue;
    }

    std::string prompt = prompts.pick(step.prompt_slot);

    if (step.equirect_canvas) {
      // one-shot canvas fill
      Mask holes = invert_mask(out.pano.fill);
      OracleRequest req;
      req.kind = OracleKind::Inpaint;
      req.rgb = &out.pano.rgb;
      req.mask = &holes;
      req.prompt = prompt + ", 360 degree equirectangular panorama";
      req.seed = step_seed;
      OracleResult res = oracle.call(req);
      out.inpaint_calls++;
      ImageF32 result = std::move(res.rgb);
      if (cfg.refine_per_view) {
        OracleRequest rreq;
        rreq.kind = OracleKind::Refine;
        rreq.rgb = &result;
        rreq.mask = &holes;
        rreq.strength = cfg.refine_strength;
        rreq.seed = derive_seed(cfg.seed, 2 * static_cast<uint64_t>(i) + 1);
        OracleResult rres = oracle.call(rreq);
        out.refine_calls++;
        result = refine_blend(result, rres.rgb, holes, cfg.feather_radius_px);
      }
      composite_on_canvas(out.pano, result, holes, out.input_footprint, cfg.feather_radius_px);
      ckpt.save(i, step_meta(i, step, req.prompt), out.pano, out.input_footprint,
                anchor_footprint, nullptr, &holes, &result, out);
      continue;
    }

    ViewRender render = render_view_from_pano(out.pano, step.pose, step.intr);
    Mask holes = invert_mask(render.known);
    zero_masked(render.rgb, holes);

    if (kind == HeuristicKind::Sequential) {
      double known = 1.0 - static_cast<double>(count_on(holes)) / holes.count();
      require(known >= cfg.min_known_fraction, ErrorKind::Stage,
              "sequential step " + std::to_string(i) + " has only " + std::to_string(known) +
                  " known context (needs " + std::to_string(cfg.min_known_fraction) + ")");
    }

    OracleRequest req;
    req.kind = OracleKind::Inpaint;
    req.rgb = &render.rgb;
    req.mask = &holes;
    req.prompt = prompt;
    req.seed = step_seed;
    OracleResult res = oracle.call(req);
    out.inpaint_calls++;
    ImageF32 view = std::move(res.rgb);

    if (cfg.refine_per_view) {
      OracleRequest rreq;
      rreq.kind = OracleKind::Refine;
      rreq.rgb = &view;
      rreq.mask = &holes;
      rreq.strength = cfg.refine_strength;
      rreq.seed = derive_seed(cfg.seed, 2 * static_cast<uint64_t>(i) + 1);
      OracleResult rres = oracle.call(rreq);
      out.refine_calls++;
      view = refine_blend(view, rres.rgb, holes, cfg.feather_radius_px);
    }

    ProjectOptions opt;
    opt.feather_radius_px = cfg.feather_radius_px;
    opt.protect = &out.input_footprint;
    project_view_to_pano(view, holes, step.pose, step.intr, out.pano, opt);
    ckpt.save(i, step_meta(i, step, prompt), out.pano, out.input_footprint, anchor_footprint,
              &render.rgb, &holes, &view, out);
  }

  if (cfg.refine_final) {
    Mask refinable = invert_mask(out.input_footprint);
    OracleRequest rreq;
    rreq.kind = OracleKind::Refine;
    rreq.rgb = &out.pano.rgb;
    rreq.mask = &refinable;
    rreq.strength = cfg.refine_strength;
    rreq.seed = derive_seed(cfg.seed, 2 * plan.steps.size() + 7);
    OracleResult rres = oracle.call(rreq);
    out.refine_calls++;
    out.pano.rgb = refine_blend(out.pano.rgb, rres.rgb, refinable, cfg.feather_radius_px);
  }

  return out;
}

}  // namespace worldgen
