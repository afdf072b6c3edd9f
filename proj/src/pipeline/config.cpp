#include "worldgen/pipeline/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "worldgen/core/error.hpp"
#include "worldgen/distortion/field.hpp"

namespace worldgen {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require(j.is_object(), ErrorKind::Config, "config section '" + where + "' must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    require(known, ErrorKind::Config, "unknown config key '" + where + "." + it.key() + "'");
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    raise(ErrorKind::Config, "config key '" + where + "." + key + "' has the wrong type");
  }
}

void require_cfg(bool ok, const std::string& msg) { require(ok, ErrorKind::Config, msg); }

json prompts_to_json(const PromptSet& p) {
  return json{{"scene", p.scene}, {"sky", p.sky}, {"ground", p.ground}};
}

json oracles_to_json(const OracleSpecs& o) {
  return json{{"inpaint", o.inpaint},
              {"refine", o.refine},
              {"depth_rel", o.depth_rel},
              {"depth_metric", o.depth_metric}};
}

}  // namespace

void PipelineConfig::validate() const {
  heuristic_from_string(heuristic);  // raises Config on unknown names
  require_cfg(input_fov_deg > 0.0 && input_fov_deg < 180.0, "input_fov_deg must lie in (0, 180)");
  require_cfg(workers >= 1, "workers must be >= 1");
  require_cfg(!output_dir.empty(), "output_dir must not be empty");

  require_cfg(pano.width >= 2 && pano.width % 2 == 0, "pano.width must be even and >= 2");
  require_cfg(pano.view_resolution > 0, "pano.view_resolution must be positive");
  require_cfg(pano.fov_mid_deg > 0.0 && pano.fov_mid_deg < 180.0,
              "pano.fov_mid_deg must lie in (0, 180)");
  require_cfg(pano.fov_polar_deg > 0.0 && pano.fov_polar_deg < 180.0,
              "pano.fov_polar_deg must lie in (0, 180)");
  require_cfg(pano.refine_strength >= 0.0 && pano.refine_strength <= 1.0,
              "pano.refine_strength must lie in [0, 1]");

  require_cfg(lift.quantile_low >= 0.0 && lift.quantile_low < lift.quantile_high &&
                  lift.quantile_high <= 1.0,
              "lift quantiles must satisfy 0 <= low < high <= 1");
  require_cfg(lift.conf_threshold >= 0.0 && lift.conf_threshold < 1.0,
              "lift.conf_threshold must lie in [0, 1)");
  require_cfg(lift.min_overlap >= 0.0 && lift.min_overlap <= 1.0,
              "lift.min_overlap must lie in [0, 1]");
  require_cfg(lift.bin_width >= 2 && lift.bin_width % 2 == 0,
              "lift.bin_width must be even and >= 2");
  require_cfg(lift.ground_clearance > 0.0, "lift.ground_clearance must be positive");

  require_cfg(grid.cube_side > 0.0, "grid.cube_side must be positive");
  require_cfg(grid.fov_deg > 0.0 && grid.fov_deg < 180.0, "grid.fov_deg must lie in (0, 180)");
  require_cfg(grid.resolution > 0, "grid.resolution must be positive");
  require_cfg(grid.stride >= 1, "grid.stride must be >= 1");
  require_cfg(grid.splat_px >= 1, "grid.splat_px must be >= 1");

  require_cfg(eval.radius > 0.0, "eval.radius must be positive");
  require_cfg(eval.views_per_ring >= 1, "eval.views_per_ring must be >= 1");
  require_cfg(eval.fov_deg > 0.0 && eval.fov_deg < 180.0, "eval.fov_deg must lie in (0, 180)");
  require_cfg(eval.resolution > 0, "eval.resolution must be positive");

  require_cfg(pairs.stride >= 1, "pairs.stride must be >= 1");
  require_cfg(pairs.splat_px >= 1, "pairs.splat_px must be >= 1");

  DistortionConfig dc;
  dc.grid_res = distortion.grid_res;
  dc.n_freq = distortion.n_freq;
  dc.code_dim = distortion.code_dim;
  dc.hidden = distortion.hidden;
  dc.offset_scale = distortion.offset_scale;
  try {
    dc.validate();
  } catch (const Error& e) {
    raise(ErrorKind::Config, std::string("distortion: ") + e.what());
  }
  require_cfg(distortion.steps >= 1, "distortion.steps must be >= 1");
  require_cfg(distortion.lr > 0.0, "distortion.lr must be positive");
  require_cfg(distortion.max_views >= 1, "distortion.max_views must be >= 1");

  require_cfg(gs.iterations > 0, "gs.iterations must be positive");
  require_cfg(gs.adc_start >= 0 && gs.adc_stop >= gs.adc_start,
              "gs adaptive density window must satisfy 0 <= start <= stop");
  require_cfg(gs.sh_degree >= 0, "gs.sh_degree must be >= 0");
  require_cfg(gs.batch_size >= 1, "gs.batch_size must be >= 1");

  require_cfg(!oracles.inpaint.empty() && !oracles.refine.empty() &&
                  !oracles.depth_rel.empty() && !oracles.depth_metric.empty(),
              "every oracle slot needs a spec string");
}

nlohmann::json config_to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["input_image"] = c.input_image;
  j["input_fov_deg"] = c.input_fov_deg;
  j["output_dir"] = c.output_dir;
  j["heuristic"] = c.heuristic;
  j["workers"] = c.workers;
  j["prompts"] = prompts_to_json(c.prompts);
  j["oracles"] = oracles_to_json(c.oracles);
  j["pano"] = json{{"width", c.pano.width},
                   {"view_resolution", c.pano.view_resolution},
                   {"fov_mid_deg", c.pano.fov_mid_deg},
                   {"fov_polar_deg", c.pano.fov_polar_deg},
                   {"refine_strength", c.pano.refine_strength},
                   {"refine_per_view", c.pano.refine_per_view},
                   {"refine_final", c.pano.refine_final}};
  j["lift"] = json{{"quantile_low", c.lift.quantile_low},
                   {"quantile_high", c.lift.quantile_high},
                   {"conf_threshold", c.lift.conf_threshold},
                   {"min_overlap", c.lift.min_overlap},
                   {"bin_width", c.lift.bin_width},
                   {"ground_clearance", c.lift.ground_clearance}};
  j["grid"] = json{{"cube_side", c.grid.cube_side},
                   {"fov_deg", c.grid.fov_deg},
                   {"resolution", c.grid.resolution},
                   {"stride", c.grid.stride},
                   {"splat_px", c.grid.splat_px}};
  j["eval"] = json{{"radius", c.eval.radius},
                   {"views_per_ring", c.eval.views_per_ring},
                   {"fov_deg", c.eval.fov_deg},
                   {"resolution", c.eval.resolution},
                   {"z_offset", c.eval.z_offset}};
  j["pairs"] = json{{"stride", c.pairs.stride}, {"splat_px", c.pairs.splat_px}};
  j["distortion"] = json{{"grid_res", c.distortion.grid_res},
                         {"n_freq", c.distortion.n_freq},
                         {"code_dim", c.distortion.code_dim},
                         {"hidden", c.distortion.hidden},
                         {"offset_scale", c.distortion.offset_scale},
                         {"steps", c.distortion.steps},
                         {"lr", c.distortion.lr},
                         {"max_views", c.distortion.max_views}};
  j["gs"] = gs_to_json(c.gs);
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  check_keys(j, "config",
             {"seed", "input_image", "input_fov_deg", "output_dir", "heuristic", "workers",
              "prompts", "oracles", "pano", "lift", "grid", "eval", "pairs", "distortion", "gs"});
  PipelineConfig c;
  get_if(j, "seed", c.seed, "config");
  get_if(j, "input_image", c.input_image, "config");
  get_if(j, "input_fov_deg", c.input_fov_deg, "config");
  get_if(j, "output_dir", c.output_dir, "config");
  get_if(j, "heuristic", c.heuristic, "config");
  get_if(j, "workers", c.workers, "config");

  if (auto it = j.find("prompts"); it != j.end()) {
    check_keys(*it, "prompts", {"scene", "sky", "ground"});
    get_if(*it, "scene", c.prompts.scene, "prompts");
    get_if(*it, "sky", c.prompts.sky, "prompts");
    get_if(*it, "ground", c.prompts.ground, "prompts");
  }
  if (auto it = j.find("oracles"); it != j.end()) {
    check_keys(*it, "oracles", {"inpaint", "refine", "depth_rel", "depth_metric"});
    get_if(*it, "inpaint", c.oracles.inpaint, "oracles");
    get_if(*it, "refine", c.oracles.refine, "oracles");
    get_if(*it, "depth_rel", c.oracles.depth_rel, "oracles");
    get_if(*it, "depth_metric", c.oracles.depth_metric, "oracles");
  }
  if (auto it = j.find("pano"); it != j.end()) {
    check_keys(*it, "pano",
               {"width", "view_resolution", "fov_mid_deg", "fov_polar_deg", "refine_strength",
                "refine_per_view", "refine_final"});
    get_if(*it, "width", c.pano.width, "pano");
    get_if(*it, "view_resolution", c.pano.view_resolution, "pano");
    get_if(*it, "fov_mid_deg", c.pano.fov_mid_deg, "pano");
    get_if(*it, "fov_polar_deg", c.pano.fov_polar_deg, "pano");
    get_if(*it, "refine_strength", c.pano.refine_strength, "pano");
    get_if(*it, "refine_per_view", c.pano.refine_per_view, "pano");
    get_if(*it, "refine_final", c.pano.refine_final, "pano");
  }
  if (auto it = j.find("lift"); it != j.end()) {
    check_keys(*it, "lift",
               {"quantile_low", "quantile_high", "conf_threshold", "min_overlap", "bin_width",
                "ground_clearance"});
    get_if(*it, "quantile_low", c.lift.quantile_low, "lift");
    get_if(*it, "quantile_high", c.lift.quantile_high, "lift");
    get_if(*it, "conf_threshold", c.lift.conf_threshold, "lift");
    get_if(*it, "min_overlap", c.lift.min_overlap, "lift");
    get_if(*it, "bin_width", c.lift.bin_width, "lift");
    get_if(*it, "ground_clearance", c.lift.ground_clearance, "lift");
  }
  if (auto it = j.find("grid"); it != j.end()) {
    check_keys(*it, "grid", {"cube_side", "fov_deg", "resolution", "stride", "splat_px"});
    get_if(*it, "cube_side", c.grid.cube_side, "grid");
    get_if(*it, "fov_deg", c.grid.fov_deg, "grid");
    get_if(*it, "resolution", c.grid.resolution, "grid");
    get_if(*it, "stride", c.grid.stride, "grid");
    get_if(*it, "splat_px", c.grid.splat_px, "grid");
  }
  if (auto it = j.find("eval"); it != j.end()) {
    check_keys(*it, "eval", {"radius", "views_per_ring", "fov_deg", "resolution", "z_offset"});
    get_if(*it, "radius", c.eval.radius, "eval");
    get_if(*it, "views_per_ring", c.eval.views_per_ring, "eval");
    get_if(*it, "fov_deg", c.eval.fov_deg, "eval");
    get_if(*it, "resolution", c.eval.resolution, "eval");
    get_if(*it, "z_offset", c.eval.z_offset, "eval");
  }
  if (auto it = j.find("pairs"); it != j.end()) {
    check_keys(*it, "pairs", {"stride", "splat_px"});
    get_if(*it, "stride", c.pairs.stride, "pairs");
    get_if(*it, "splat_px", c.pairs.splat_px, "pairs");
  }
  if (auto it = j.find("distortion"); it != j.end()) {
    check_keys(*it, "distortion",
               {"grid_res", "n_freq", "code_dim", "hidden", "offset_scale", "steps", "lr",
                "max_views"});
    get_if(*it, "grid_res", c.distortion.grid_res, "distortion");
    get_if(*it, "n_freq", c.distortion.n_freq, "distortion");
    get_if(*it, "code_dim", c.distortion.code_dim, "distortion");
    get_if(*it, "hidden", c.distortion.hidden, "distortion");
    get_if(*it, "offset_scale", c.distortion.offset_scale, "distortion");
    get_if(*it, "steps", c.distortion.steps, "distortion");
    get_if(*it, "lr", c.distortion.lr, "distortion");
    get_if(*it, "max_views", c.distortion.max_views, "distortion");
  }
  if (auto it = j.find("gs"); it != j.end()) {
    c.gs = gs_from_json(*it);
  }
  c.validate();
  return c;
}

std::string serialize_config(const PipelineConfig& c) { return config_to_json(c).dump(2) + "\n"; }

PipelineConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Config, "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const PipelineConfig& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write config file: " + path);
  out << serialize_config(c);
  require(out.good(), ErrorKind::Io, "failed writing config file: " + path);
}

nlohmann::json gs_to_json(const GsSettings& s) {
  return json{{"iterations", s.iterations}, {"opacity_reset", s.opacity_reset},
              {"adc_start", s.adc_start},   {"adc_stop", s.adc_stop},
              {"sh_degree", s.sh_degree},   {"batch_size", s.batch_size}};
}

GsSettings gs_from_json(const nlohmann::json& j) {
  check_keys(j, "gs",
             {"iterations", "opacity_reset", "adc_start", "adc_stop", "sh_degree", "batch_size"});
  GsSettings s;
  get_if(j, "iterations", s.iterations, "gs");
  get_if(j, "opacity_reset", s.opacity_reset, "gs");
  get_if(j, "adc_start", s.adc_start, "gs");
  get_if(j, "adc_stop", s.adc_stop, "gs");
  get_if(j, "sh_degree", s.sh_degree, "gs");
  get_if(j, "batch_size", s.batch_size, "gs");
  return s;
}

}  // namespace worldgen
