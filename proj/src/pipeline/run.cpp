#include "worldgen/pipeline/run.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <thread>
#include <vector>

#include "worldgen/core/io_pfm.hpp"
#include "worldgen/core/io_png.hpp"
#include "worldgen/core/rng.hpp"
#include "worldgen/distortion/field.hpp"
#include "worldgen/geometry/equirect.hpp"
#include "worldgen/lift/io_ply.hpp"
#include "worldgen/lift/stitch.hpp"
#include "worldgen/oracle/oracle.hpp"
#include "worldgen/pano/outpaint.hpp"
#include "worldgen/pipeline/metrics.hpp"
#include "worldgen/pipeline/oracles.hpp"
#include "worldgen/warp/poses.hpp"
#include "worldgen/warp/render.hpp"
#include "worldgen/warp/warp_pair.hpp"

namespace fs = std::filesystem;

namespace worldgen {

using nlohmann::json;

namespace {

fs::path stage_root(const PipelineConfig& cfg, const char* name) {
  return fs::path(cfg.output_dir) / name;
}

bool is_done(const fs::path& dir) { return fs::exists(dir / ".done"); }

void mark_done(const fs::path& dir) {
  static const char ok[] = "ok\n";
  write_file((dir / ".done").string(), ok, sizeof(ok) - 1);
}

void write_json_file(const fs::path& path, const json& j) {
  std::string text = j.dump(2) + "\n";
  write_file(path.string(), text.data(), text.size());
}

json read_json_file(const fs::path& path) {
  auto bytes = read_file(path.string());
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    raise(ErrorKind::Io, "corrupt JSON at " + path.string() + ": " + e.what());
  }
}

std::string grid_name(const char* prefix, int idx) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, idx);
  return buf;
}

std::string pano_name(int idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pano_%02d", idx);
  return buf;
}

// Attach the stage name to anything a stage raises, keeping the error kind
// (so oracle failures still map to the oracle exit code).
template <typename Fn>
void run_stage(const char* name, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    raise(e.kind(), std::string(name) + " stage: " + e.what());
  }
}

// Deterministic fan-out: items may run on any worker, but every item i only
// fills slot i of pre-sized outputs (or its own files), so results are
// independent of scheduling. The first exception wins and is rethrown.
template <typename Fn>
void parallel_for(int workers, int n, Fn&& fn) {
  if (n <= 0) return;
  int threads = std::min(workers, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

PlanConfig plan_config_of(const PipelineConfig& cfg) {
  PlanConfig pc;
  pc.view_size = cfg.pano.view_resolution;
  pc.mid_fov = deg2rad(cfg.pano.fov_mid_deg);
  pc.polar_fov = deg2rad(cfg.pano.fov_polar_deg);
  return pc;
}

EquirectPanorama load_pano(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "pano");
  require(is_done(dir), ErrorKind::Stage, "pano artifacts missing; run the pano stage first");
  EquirectPanorama p;
  p.rgb = read_pfm((dir / "pano.pfm").string());
  require(p.rgb.channels() == 3, ErrorKind::Io, "pano.pfm is not a color panorama");
  p.fill = read_png((dir / "fill.png").string());
  require(p.fill.channels() == 1 && p.fill.width() == p.rgb.width() &&
              p.fill.height() == p.rgb.height(),
          ErrorKind::Io, "fill.png does not match pano.pfm");
  return p;
}

PointCloud load_cloud(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "lift");
  require(is_done(dir), ErrorKind::Stage, "lift artifacts missing; run the lift stage first");
  return read_ply((dir / "points.ply").string());
}

json load_grid_meta(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "grid");
  require(is_done(dir), ErrorKind::Stage, "grid artifacts missing; run the grid stage first");
  return read_json_file(dir / "meta.json");
}

Intrinsics input_intrinsics(const PipelineConfig& cfg, int width, int height) {
  return Intrinsics::from_fov_x(width, height, deg2rad(cfg.input_fov_deg));
}

json export_entry(const std::string& kind, const std::string& image, const std::string& mask,
                  const CameraPose& pose, const Intrinsics& K) {
  json e;
  e["kind"] = kind;
  e["image"] = image;
  e["mask"] = mask;
  e["width"] = K.width;
  e["height"] = K.height;
  e["camera"] = camera_meta(pose, K.fov_x, K.fov_y);
  return e;
}

// --------------------------------------------------------------------------
// pano

void pano_impl(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "pano");
  if (is_done(dir)) return;
  fs::create_directories(dir);

  require(!cfg.input_image.empty(), ErrorKind::Config, "input_image is not set");
  ImageU8 in8 = read_png(cfg.input_image);
  require(in8.channels() == 3, ErrorKind::Config, "input image must be RGB: " + cfg.input_image);
  ImageF32 input = to_f32(in8);
  Intrinsics in_k = input_intrinsics(cfg, in8.width(), in8.height());

  OutpaintConfig oc;
  oc.pano_width = cfg.pano.width;
  oc.refine_strength = cfg.pano.refine_strength;
  oc.refine_per_view = cfg.pano.refine_per_view;
  oc.refine_final = cfg.pano.refine_final;
  oc.plan = plan_config_of(cfg);
  oc.checkpoint_dir = (dir / "checkpoints").string();
  oc.seed = cfg.seed;

  auto client = make_oracle_client(cfg.oracles);
  OutpaintResult res =
      run_outpaint(input, in_k, cfg.prompts, heuristic_from_string(cfg.heuristic), *client, oc);

  write_pfm((dir / "pano.pfm").string(), res.pano.rgb);
  write_png((dir / "pano.png").string(), to_u8(res.pano.rgb));
  write_png((dir / "fill.png").string(), res.pano.fill);
  write_png((dir / "input_footprint.png").string(), res.input_footprint);

  json meta;
  meta["heuristic"] = cfg.heuristic;
  meta["pano_width"] = cfg.pano.width;
  meta["seed"] = cfg.seed;
  meta["inpaint_calls"] = res.inpaint_calls;
  meta["refine_calls"] = res.refine_calls;
  meta["anchor_actions"] = res.anchor_actions;
  meta["coverage"] = coverage(res.pano.fill);
  meta["solid_angle_coverage"] = weighted_fill_fraction(res.pano);
  write_json_file(dir / "meta.json", meta);
  mark_done(dir);
}

// --------------------------------------------------------------------------
// lift

void lift_impl(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "lift");
  if (is_done(dir)) return;
  fs::create_directories(dir);

  EquirectPanorama pano = load_pano(cfg);
  std::vector<CameraView> rig = lift_rig(cfg);
  auto client = make_oracle_client(cfg.oracles);

  std::vector<StitchView> views(rig.size());
  DepthMap d_metric;

  parallel_for(cfg.workers, static_cast<int>(rig.size()), [&](int i) {
    try {
      const CameraView& v = rig[static_cast<size_t>(i)];
      ViewRender r = render_view_from_pano(pano, v.pose, v.intr);

      OracleRequest req;
      req.kind = OracleKind::DepthRel;
      req.rgb = &r.rgb;
      req.seed = derive_seed(cfg.seed, 2000 + static_cast<uint64_t>(i));
      req.meta = camera_meta(v.pose, v.intr.fov_x, v.intr.fov_y);
      OracleResult res = client->call(req);
      require(res.depth.has_value() && !res.depth->metric, ErrorKind::Oracle,
              "relative depth oracle returned the wrong scale class");

      DepthMap dm;
      dm.values = res.depth->values;
      dm.confidence = res.depth->confidence;
      dm.scale_class = ScaleClass::Relative;
      // pixels the pano never filled carry no real color; keep them out
      for (int y = 0; y < r.known.height(); ++y)
        for (int x = 0; x < r.known.width(); ++x)
          if (!r.known.at(x, y)) dm.confidence.at(x, y) = 0.0f;

      if (i == 0) {
        OracleRequest mreq = req;
        mreq.kind = OracleKind::DepthMetric;
        mreq.seed = derive_seed(cfg.seed, 2100);
        OracleResult mres = client->call(mreq);
        require(mres.depth.has_value() && mres.depth->metric, ErrorKind::Oracle,
                "metric depth oracle returned relative depth");
        d_metric.values = mres.depth->values;
        d_metric.confidence = mres.depth->confidence;
        d_metric.scale_class = ScaleClass::Metric;
        for (int y = 0; y < r.known.height(); ++y)
          for (int x = 0; x < r.known.width(); ++x)
            if (!r.known.at(x, y)) d_metric.confidence.at(x, y) = 0.0f;
      }

      views[static_cast<size_t>(i)] =
          StitchView{std::move(r.rgb), std::move(dm), v.pose, v.intr};
    } catch (const Error& e) {
      raise(e.kind(), "view " + std::to_string(i) + ": " + e.what());
    }
  });

  StitchOptions so;
  so.conf_threshold = cfg.lift.conf_threshold;
  so.min_overlap = cfg.lift.min_overlap;
  so.bin_width = cfg.lift.bin_width;
  so.align.q_low = cfg.lift.quantile_low;
  so.align.q_high = cfg.lift.quantile_high;
  so.align.conf_threshold = cfg.lift.conf_threshold;
  StitchResult sr = stitch_depth_views(views, d_metric, so);

  double ground_scale = enforce_ground_clearance(sr.cloud, cfg.lift.ground_clearance);
  write_ply((dir / "points.ply").string(), sr.cloud);

  double below = 0.0;
  size_t nb = 0;
  for (const Vec3& p : sr.cloud.positions)
    if (p.z() < 0.0) {
      below += -p.z();
      ++nb;
    }

  json meta;
  meta["views"] = rig.size();
  meta["points"] = sr.cloud.size();
  meta["view_scales"] = sr.view_scales;
  meta["view_shifts"] = sr.view_shifts;
  meta["ground_scale"] = ground_scale;
  meta["ground_clearance"] = nb > 0 ? below / static_cast<double>(nb) : 0.0;
  write_json_file(dir / "meta.json", meta);
  mark_done(dir);
}

// --------------------------------------------------------------------------
// grid

void grid_impl(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "grid");
  if (is_done(dir)) return;
  fs::create_directories(dir);

  PointCloud cloud = load_cloud(cfg);
  Intrinsics intr = Intrinsics::square(cfg.grid.resolution, deg2rad(cfg.grid.fov_deg));
  std::vector<CameraView> all = camera_grid(cfg.grid.cube_side, intr);
  std::vector<int> selected;
  for (int i = 0; i < static_cast<int>(all.size()); i += cfg.grid.stride) selected.push_back(i);

  auto client = make_oracle_client(cfg.oracles);

  struct GridOut {
    Mask holes;
    ImageU8 render8, view8;
    double hole_fraction = 0.0;
    bool inpainted = false;
  };
  std::vector<GridOut> outs(selected.size());
  std::atomic<int> calls{0};

  parallel_for(cfg.workers, static_cast<int>(selected.size()), [&](int k) {
    int idx = selected[static_cast<size_t>(k)];
    try {
      const CameraView& cv = all[static_cast<size_t>(idx)];
      RenderedView rv = render_pointcloud(cloud, cv.pose, cv.intr, cfg.grid.splat_px);

      GridOut& o = outs[static_cast<size_t>(k)];
      o.holes = Mask(intr.width, intr.height, 1, 0);
      size_t nh = 0;
      for (size_t i = 0; i < o.holes.count(); ++i)
        if (!rv.valid.data()[i]) {
          o.holes.data()[i] = kMaskOn;
          ++nh;
        }
      o.render8 = to_u8(rv.rgb);
      o.hole_fraction = static_cast<double>(nh) / static_cast<double>(o.holes.count());

      if (nh > 0) {
        OracleRequest req;
        req.kind = OracleKind::Inpaint;
        req.rgb = &rv.rgb;
        req.mask = &o.holes;
        req.prompt = cfg.prompts.scene;
        req.seed = derive_seed(cfg.seed, 3000 + static_cast<uint64_t>(idx));
        req.meta = camera_meta(cv.pose, intr.fov_x, intr.fov_y);
        OracleResult res = client->call(req);
        o.view8 = to_u8(res.rgb);
        o.inpainted = true;
        calls.fetch_add(1);
      } else {
        o.view8 = o.render8;
      }
    } catch (const Error& e) {
      raise(e.kind(), "view " + std::to_string(idx) + ": " + e.what());
    }
  });

  json views = json::array();
  for (size_t k = 0; k < selected.size(); ++k) {
    int idx = selected[k];
    const GridOut& o = outs[k];
    write_png((dir / (grid_name("render_", idx) + ".png")).string(), o.render8);
    write_png((dir / (grid_name("mask_", idx) + ".png")).string(), o.holes);
    write_png((dir / (grid_name("view_", idx) + ".png")).string(), o.view8);
    json v;
    v["index"] = idx;
    v["camera"] = camera_meta(all[static_cast<size_t>(idx)].pose, intr.fov_x, intr.fov_y);
    v["hole_fraction"] = o.hole_fraction;
    v["inpainted"] = o.inpainted;
    views.push_back(std::move(v));
  }

  json meta;
  meta["resolution"] = cfg.grid.resolution;
  meta["fov_deg"] = cfg.grid.fov_deg;
  meta["stride"] = cfg.grid.stride;
  meta["splat_px"] = cfg.grid.splat_px;
  meta["inpaint_calls"] = calls.load();
  meta["views"] = std::move(views);
  write_json_file(dir / "meta.json", meta);
  mark_done(dir);
}

// --------------------------------------------------------------------------
// export

bool in_backside_frustum(const Vec3& dir_world, const Mat3& backside_rot_t,
                         const Intrinsics& in_k) {
  double vx = 0.0, vy = 0.0;
  return dir_to_view_pixel(backside_rot_t * dir_world, in_k, vx, vy);
}

void export_impl(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "export");
  if (is_done(dir)) return;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");

  EquirectPanorama pano = load_pano(cfg);
  json grid_meta = load_grid_meta(cfg);
  fs::path grid_dir = stage_root(cfg, "grid");
  fs::path lift_dir = stage_root(cfg, "lift");

  json entries = json::array();

  // Input view: the source image is trusted everywhere.
  require(!cfg.input_image.empty(), ErrorKind::Config, "input_image is not set");
  auto input_bytes = read_file(cfg.input_image);
  ImageU8 in8 = decode_png(input_bytes.data(), input_bytes.size());
  require(in8.channels() == 3, ErrorKind::Config, "input image must be RGB: " + cfg.input_image);
  Intrinsics in_k = input_intrinsics(cfg, in8.width(), in8.height());
  write_file((dir / "images" / "input.png").string(), input_bytes.data(), input_bytes.size());
  write_png((dir / "masks" / "input.png").string(), Mask(in8.width(), in8.height(), 1, kMaskOn));
  entries.push_back(
      export_entry("input", "images/input.png", "masks/input.png", pose_from_angles(0.0, 0.0), in_k));

  // Panorama views: rendered from the finished canvas. Usable wherever the
  // canvas is filled, except inside the backside frustum where the input
  // was anchored during synthesis (that content is the least trustworthy).
  ViewPlan plan = plan_views(HeuristicKind::Anchored, plan_config_of(cfg));
  Mat3 backside_rot_t = pose_from_angles(kPi, 0.0).rotation.transpose();
  int pj = 0;
  for (const PlanStep& s : plan.steps) {
    if (s.anchor != AnchorAction::None || s.equirect_canvas) continue;
    ViewRender r = render_view_from_pano(pano, s.pose, s.intr);
    Mask usage = r.known;
    for (int y = 0; y < usage.height(); ++y)
      for (int x = 0; x < usage.width(); ++x) {
        if (!usage.at(x, y)) continue;
        Vec3 d = s.pose.rotation * view_ray(x + 0.5, y + 0.5, s.intr);
        if (in_backside_frustum(d, backside_rot_t, in_k)) usage.at(x, y) = 0;
      }
    std::string base = pano_name(pj);
    write_png((dir / "images" / (base + ".png")).string(), to_u8(r.rgb));
    write_png((dir / "masks" / (base + ".png")).string(), usage);
    entries.push_back(export_entry("pano", "images/" + base + ".png", "masks/" + base + ".png",
                                   s.pose, s.intr));
    ++pj;
  }

  // Grid views: the inpainted image is only usable inside its hole mask;
  // everything outside is already represented by the point cloud.
  for (const json& v : grid_meta.at("views")) {
    int idx = v.at("index").get<int>();
    auto img = read_file((grid_dir / (grid_name("view_", idx) + ".png")).string());
    auto msk = read_file((grid_dir / (grid_name("mask_", idx) + ".png")).string());
    std::string base = grid_name("grid_", idx);
    write_file((dir / "images" / (base + ".png")).string(), img.data(), img.size());
    write_file((dir / "masks" / (base + ".png")).string(), msk.data(), msk.size());
    json e;
    e["kind"] = "grid";
    e["grid_index"] = idx;
    e["image"] = "images/" + base + ".png";
    e["mask"] = "masks/" + base + ".png";
    e["width"] = grid_meta.at("resolution").get<int>();
    e["height"] = grid_meta.at("resolution").get<int>();
    e["camera"] = v.at("camera");
    entries.push_back(std::move(e));
  }

  // Initial point cloud travels with the dataset.
  auto ply = read_file((lift_dir / "points.ply").string());
  write_file((dir / "points.ply").string(), ply.data(), ply.size());

  json poses;
  poses["images"] = std::move(entries);
  write_json_file(dir / "poses.json", poses);

  json gsc;
  gsc["trainer"] = gs_to_json(cfg.gs);
  gsc["points"] = "points.ply";
  gsc["poses"] = "poses.json";
  gsc["images_dir"] = "images";
  gsc["masks_dir"] = "masks";
  write_json_file(dir / "gs_config.json", gsc);

  check_export_masks(cfg);
  mark_done(dir);
}

// --------------------------------------------------------------------------
// eval

void eval_impl(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "eval");
  if (is_done(dir)) return;
  fs::create_directories(dir);

  PointCloud cloud = load_cloud(cfg);
  EquirectPanorama pano = load_pano(cfg);
  auto trajs = eval_trajectories(cfg.eval.radius, cfg.eval.views_per_ring,
                                 deg2rad(cfg.eval.fov_deg), cfg.eval.resolution,
                                 cfg.eval.z_offset);

  struct Item {
    int ring, view;
    CameraView cam;
  };
  std::vector<Item> items;
  for (size_t r = 0; r < trajs.size(); ++r)
    for (size_t v = 0; v < trajs[r].size(); ++v)
      items.push_back({static_cast<int>(r), static_cast<int>(v), trajs[r][v]});

  struct Out {
    double cov = 0.0;
    double psnr_db = 0.0;
    bool has_psnr = false;
    ImageU8 png;
  };
  std::vector<Out> outs(items.size());

  parallel_for(cfg.workers, static_cast<int>(items.size()), [&](int i) {
    const Item& it = items[static_cast<size_t>(i)];
    try {
      RenderedView rv = render_pointcloud(cloud, it.cam.pose, it.cam.intr, cfg.grid.splat_px);
      ViewRender pr = render_view_from_pano(pano, it.cam.pose, it.cam.intr);
      Mask both(rv.valid.width(), rv.valid.height(), 1, 0);
      size_t n_both = 0;
      for (size_t p = 0; p < both.count(); ++p)
        if (rv.valid.data()[p] == kMaskOn && pr.known.data()[p] == kMaskOn) {
          both.data()[p] = kMaskOn;
          ++n_both;
        }
      Out& o = outs[static_cast<size_t>(i)];
      o.cov = coverage(rv.valid);
      if (n_both > 0) {
        o.psnr_db = psnr(rv.rgb, pr.rgb, &both);
        o.has_psnr = true;
      }
      o.png = to_u8(rv.rgb);
    } catch (const Error& e) {
      raise(e.kind(), "ring " + std::to_string(it.ring) + " view " + std::to_string(it.view) +
                          ": " + e.what());
    }
  });

  json views = json::array();
  double cov_sum = 0.0, psnr_sum = 0.0;
  int n_psnr = 0;
  for (size_t i = 0; i < items.size(); ++i) {
    const Item& it = items[i];
    const Out& o = outs[i];
    char buf[48];
    std::snprintf(buf, sizeof(buf), "ring%d_view%02d.png", it.ring, it.view);
    write_png((dir / buf).string(), o.png);
    json v;
    v["ring"] = it.ring;
    v["view"] = it.view;
    v["camera"] = camera_meta(it.cam.pose, it.cam.intr.fov_x, it.cam.intr.fov_y);
    v["coverage"] = o.cov;
    if (o.has_psnr) {
      v["psnr_vs_pano"] = o.psnr_db;
      psnr_sum += o.psnr_db;
      ++n_psnr;
    } else {
      v["psnr_vs_pano"] = nullptr;
    }
    cov_sum += o.cov;
    views.push_back(std::move(v));
  }

  json meta;
  meta["views"] = std::move(views);
  meta["mean_coverage"] = items.empty() ? 0.0 : cov_sum / static_cast<double>(items.size());
  if (n_psnr > 0) {
    meta["mean_psnr_vs_pano"] = psnr_sum / n_psnr;
  } else {
    meta["mean_psnr_vs_pano"] = nullptr;
  }
  write_json_file(dir / "eval.json", meta);
  mark_done(dir);
}

// --------------------------------------------------------------------------
// pairs

void pairs_impl(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "pairs");
  if (is_done(dir)) return;
  fs::create_directories(dir);

  PointCloud cloud = load_cloud(cfg);
  Intrinsics intr = Intrinsics::square(cfg.grid.resolution, deg2rad(cfg.grid.fov_deg));
  std::vector<CameraView> all = camera_grid(cfg.grid.cube_side, intr);
  std::vector<int> selected;
  for (int i = 0; i < static_cast<int>(all.size()); i += cfg.pairs.stride) selected.push_back(i);

  std::vector<double> hole_fracs(selected.size(), 0.0);

  parallel_for(cfg.workers, static_cast<int>(selected.size()), [&](int k) {
    int idx = selected[static_cast<size_t>(k)];
    try {
      const CameraView& cv = all[static_cast<size_t>(idx)];
      // Source camera: same orientation at the cloud center; the pair is a
      // pure translation out to the grid position, which is what creates
      // parallax disocclusions.
      CameraPose src;
      src.rotation = cv.pose.rotation;
      src.position = Vec3::Zero();

      RenderedView rv = render_pointcloud(cloud, src, intr, 1);
      DepthMap dm;
      dm.values = rv.depth;
      dm.confidence = ImageF32(intr.width, intr.height, 1, 0.0f);
      for (size_t p = 0; p < dm.confidence.count(); ++p)
        if (rv.valid.data()[p] == kMaskOn) dm.confidence.data()[p] = 1.0f;
      dm.scale_class = ScaleClass::Metric;

      WarpPairOptions wo;
      wo.conf_threshold = cfg.lift.conf_threshold;
      wo.splat_px = cfg.pairs.splat_px;
      WarpPair pair = make_warp_pair(rv.rgb, dm, src, cv.pose, intr, wo);
      save_warp_pair((dir / grid_name("pair_", idx)).string(), pair, src, cv.pose, intr);
      hole_fracs[static_cast<size_t>(k)] = coverage(pair.hole_mask);
    } catch (const Error& e) {
      raise(e.kind(), "pair " + std::to_string(idx) + ": " + e.what());
    }
  });

  json list = json::array();
  for (size_t k = 0; k < selected.size(); ++k) {
    json p;
    p["index"] = selected[k];
    p["dir"] = grid_name("pair_", selected[k]);
    p["hole_fraction"] = hole_fracs[k];
    list.push_back(std::move(p));
  }
  json meta;
  meta["stride"] = cfg.pairs.stride;
  meta["splat_px"] = cfg.pairs.splat_px;
  meta["pairs"] = std::move(list);
  write_json_file(dir / "meta.json", meta);
  mark_done(dir);
}

// --------------------------------------------------------------------------
// distortion fit

void distort_impl(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "distort");
  if (is_done(dir)) return;
  fs::create_directories(dir);

  json grid_meta = load_grid_meta(cfg);
  fs::path grid_dir = stage_root(cfg, "grid");
  const json& views = grid_meta.at("views");
  int n = std::min<int>(cfg.distortion.max_views, static_cast<int>(views.size()));
  require(n > 0, ErrorKind::Stage, "no grid views available for the distortion fit");

  // Each inpainted view is fit against the cloud render, with hole pixels
  // neutralized (target = view there) so only real photometric inconsistency
  // drives the offsets.
  std::vector<FitPair> fit_pairs(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    int idx = views[static_cast<size_t>(k)].at("index").get<int>();
    ImageU8 view8 = read_png((grid_dir / (grid_name("view_", idx) + ".png")).string());
    ImageU8 render8 = read_png((grid_dir / (grid_name("render_", idx) + ".png")).string());
    Mask holes = read_png((grid_dir / (grid_name("mask_", idx) + ".png")).string());
    require(view8.same_shape(render8) && holes.width() == view8.width() &&
                holes.height() == view8.height(),
            ErrorKind::Io, "grid artifacts disagree on the view size");

    FitPair& fp = fit_pairs[static_cast<size_t>(k)];
    fp.image_id = grid_name("grid_", idx);
    fp.image = to_f32(view8);
    fp.target = fp.image;
    for (int y = 0; y < view8.height(); ++y)
      for (int x = 0; x < view8.width(); ++x)
        if (!holes.at(x, y))
          for (int c = 0; c < 3; ++c)
            fp.target.at(x, y, c) = static_cast<float>(render8.at(x, y, c));
  }

  DistortionConfig dc;
  dc.grid_res = cfg.distortion.grid_res;
  dc.n_freq = cfg.distortion.n_freq;
  dc.code_dim = cfg.distortion.code_dim;
  dc.hidden = cfg.distortion.hidden;
  dc.offset_scale = cfg.distortion.offset_scale;
  DistortionField field(dc, derive_seed(cfg.seed, 4000));
  for (const FitPair& fp : fit_pairs) field.register_image(fp.image_id);

  FitOptions fo;
  fo.steps = cfg.distortion.steps;
  fo.lr = cfg.distortion.lr;
  FitResult fr = fit(field, fit_pairs, fo);

  save_distortion(field, (dir / "checkpoint.wgdf").string());
  json meta;
  json ids = json::array();
  for (const FitPair& fp : fit_pairs) ids.push_back(fp.image_id);
  meta["image_ids"] = std::move(ids);
  meta["steps_run"] = fr.steps_run;
  meta["losses"] = fr.losses;
  write_json_file(dir / "losses.json", meta);
  mark_done(dir);
}

}  // namespace

// --------------------------------------------------------------------------
// public entry points

std::vector<CameraView> lift_rig(const PipelineConfig& cfg) {
  std::vector<CameraView> rig;
  rig.push_back({pose_from_angles(0.0, 0.0),
                 Intrinsics::square(cfg.pano.view_resolution, deg2rad(cfg.input_fov_deg))});
  // Mid-band views first, polar rings last: scale chaining aligns each view
  // against already-aligned content, and the polar views only overlap the
  // mid band, not the input view alone.
  ViewPlan plan = plan_views(HeuristicKind::Anchored, plan_config_of(cfg));
  for (int polar = 0; polar < 2; ++polar)
    for (const PlanStep& s : plan.steps) {
      if (s.anchor != AnchorAction::None || s.equirect_canvas) continue;
      if ((s.prompt_slot != PromptSlot::Scene) == (polar == 1)) rig.push_back({s.pose, s.intr});
    }
  return rig;
}

CameraPose pose_from_meta(const nlohmann::json& camera) {
  try {
    const json& p = camera.at("pose");
    auto r = p.at("rotation").get<std::vector<double>>();
    auto t = p.at("position").get<std::vector<double>>();
    require(r.size() == 9 && t.size() == 3, ErrorKind::Io, "pose block has wrong array sizes");
    CameraPose pose;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) pose.rotation(i, j) = r[static_cast<size_t>(i) * 3 + j];
    pose.position = Vec3(t[0], t[1], t[2]);
    pose.validate();
    return pose;
  } catch (const json::exception& e) {
    raise(ErrorKind::Io, std::string("malformed camera block: ") + e.what());
  }
}

void check_export_masks(const PipelineConfig& cfg) {
  fs::path dir = stage_root(cfg, "export");
  fs::path grid_dir = stage_root(cfg, "grid");
  json poses = read_json_file(dir / "poses.json");

  // Recover the backside frustum from the exported input entry itself, so
  // the check stands on the dataset alone.
  Intrinsics in_k;
  bool have_input = false;
  for (const json& e : poses.at("images")) {
    if (e.at("kind") == "input") {
      in_k.width = e.at("width").get<int>();
      in_k.height = e.at("height").get<int>();
      in_k.fov_x = e.at("camera").at("fov_x").get<double>();
      in_k.fov_y = e.at("camera").at("fov_y").get<double>();
      have_input = true;
    }
  }
  require(have_input, ErrorKind::Contract, "export has no input entry");
  Mat3 backside_rot_t = pose_from_angles(kPi, 0.0).rotation.transpose();

  for (const json& e : poses.at("images")) {
    const std::string kind = e.at("kind").get<std::string>();
    Mask usage = read_png((dir / e.at("mask").get<std::string>()).string());

    if (kind == "grid") {
      int idx = e.at("grid_index").get<int>();
      Mask holes = read_png((grid_dir / (grid_name("mask_", idx) + ".png")).string());
      require(holes.same_shape(usage), ErrorKind::Contract,
              "export: grid usage mask shape drifted from its hole mask");
      for (size_t p = 0; p < usage.count(); ++p)
        require(usage.data()[p] != kMaskOn || holes.data()[p] == kMaskOn, ErrorKind::Contract,
                "export: grid view marks a pixel outside its hole mask usable");
    } else if (kind == "pano") {
      CameraPose pose = pose_from_meta(e.at("camera"));
      Intrinsics K;
      K.width = e.at("width").get<int>();
      K.height = e.at("height").get<int>();
      K.fov_x = e.at("camera").at("fov_x").get<double>();
      K.fov_y = e.at("camera").at("fov_y").get<double>();
      for (int y = 0; y < usage.height(); ++y)
        for (int x = 0; x < usage.width(); ++x) {
          if (!usage.at(x, y)) continue;
          Vec3 d = pose.rotation * view_ray(x + 0.5, y + 0.5, K);
          require(!in_backside_frustum(d, backside_rot_t, in_k), ErrorKind::Contract,
                  "export: pano view marks an anchor-region pixel usable");
        }
    } else {
      require(kind == "input", ErrorKind::Contract, "export: unknown image kind " + kind);
      for (size_t p = 0; p < usage.count(); ++p)
        require(usage.data()[p] == kMaskOn, ErrorKind::Contract,
                "export: input view must be fully usable");
    }
  }
}

void stage_pano(const PipelineConfig& cfg) {
  cfg.validate();
  run_stage("pano", [&] { pano_impl(cfg); });
}

void stage_lift(const PipelineConfig& cfg) {
  cfg.validate();
  run_stage("lift", [&] { lift_impl(cfg); });
}

void stage_grid(const PipelineConfig& cfg) {
  cfg.validate();
  run_stage("grid", [&] { grid_impl(cfg); });
}

void stage_export(const PipelineConfig& cfg) {
  cfg.validate();
  run_stage("export", [&] { export_impl(cfg); });
}

void stage_eval(const PipelineConfig& cfg) {
  cfg.validate();
  run_stage("eval", [&] { eval_impl(cfg); });
}

void stage_pairs(const PipelineConfig& cfg) {
  cfg.validate();
  run_stage("pairs", [&] { pairs_impl(cfg); });
}

void stage_distort_fit(const PipelineConfig& cfg) {
  cfg.validate();
  run_stage("distort", [&] { distort_impl(cfg); });
}

void run_pipeline(const PipelineConfig& cfg, const std::string& stop_after) {
  require(stop_after.empty() || stop_after == "pano" || stop_after == "lift" ||
              stop_after == "grid" || stop_after == "export",
          ErrorKind::Config, "unknown stop_after stage: " + stop_after);
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  save_config(cfg, (fs::path(cfg.output_dir) / "config.json").string());

  stage_pano(cfg);
  if (stop_after == "pano") return;
  stage_lift(cfg);
  if (stop_after == "lift") return;
  stage_grid(cfg);
  if (stop_after == "grid") return;
  stage_export(cfg);
}

}  // namespace worldgen
