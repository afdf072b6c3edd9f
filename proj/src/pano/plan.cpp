#include "worldgen/pano/plan.hpp"

namespace worldgen {

std::string heuristic_to_string(HeuristicKind k) {
  switch (k) {
    case HeuristicKind::AdHoc: return "adhoc";
    case HeuristicKind::Sequential: return "sequential";
    case HeuristicKind::Anchored: return "anchored";
  }
  raise(ErrorKind::Contract, "bad HeuristicKind");
}

HeuristicKind heuristic_from_string(const std::string& s) {
  if (s == "adhoc") return HeuristicKind::AdHoc;
  if (s == "sequential") return HeuristicKind::Sequential;
  if (s == "anchored") return HeuristicKind::Anchored;
  raise(ErrorKind::Config, "unknown heuristic: " + s);
}

int ViewPlan::inpaint_steps() const {
  int n = 0;
  for (const auto& s : steps) n += s.anchor == AnchorAction::None ? 1 : 0;
  return n;
}

int ViewPlan::anchor_steps() const {
  return static_cast<int>(steps.size()) - inpaint_steps();
}

static PlanStep view_step(double yaw, double pitch, double fov, int size, PromptSlot slot) {
  PlanStep s;
  s.pose = pose_from_angles(yaw, pitch);
  s.intr = Intrinsics::square(size, fov);
  s.prompt_slot = slot;
  return s;
}

// 4 views, yaw 0/90/180/270, pitched toward a pole. Their union covers the
// cap above (polar_pitch - polar_fov/2) at every azimuth.
static void add_polar_ring(std::vector<PlanStep>& steps, const PlanConfig& c, int sign) {
  for (int i = 0; i < 4; ++i)
    steps.push_back(view_step(i * kPi / 2.0, sign * c.polar_pitch, c.polar_fov, c.view_size,
                              sign > 0 ? PromptSlot::Sky : PromptSlot::Ground));
}

ViewPlan plan_views(HeuristicKind kind, const PlanConfig& cfg) {
  require(cfg.view_size > 0, ErrorKind::Config, "plan: bad view size");
  ViewPlan plan;
  plan.kind = kind;

  if (kind == HeuristicKind::AdHoc) {
    PlanStep s;
    s.equirect_canvas = true;
    s.prompt_slot = PromptSlot::Scene;
    plan.steps.push_back(s);
    return plan;
  }

  if (kind == HeuristicKind::Sequential) {
    // sweep right to the back, then left, then close the poles
    for (int side : {+1, -1})
      for (int i = 0; i < 4; ++i)
        plan.steps.push_back(view_step(side * (cfg.seq_first_yaw + i * cfg.mid_yaw_step), 0.0,
                                       cfg.mid_fov, cfg.view_size, PromptSlot::Scene));
    add_polar_ring(plan.steps, cfg, +1);
    add_polar_ring(plan.steps, cfg, -1);
    return plan;
  }

  // Anchored: backside anchor in place while the polar caps are generated,
  // removed before the mid band is filled outward from the input.
  PlanStep place;
  place.anchor = AnchorAction::PlaceBackside;
  place.pose = pose_from_angles(kPi, 0.0);
  plan.steps.push_back(place);
  add_polar_ring(plan.steps, cfg, +1);
  add_polar_ring(plan.steps, cfg, -1);
  PlanStep remove;
  remove.anchor = AnchorAction::RemoveBackside;
  plan.steps.push_back(remove);
  plan.steps.push_back(view_step(0.0, 0.0, cfg.mid_fov, cfg.view_size, PromptSlot::Scene));
  for (int i = 1; i <= 3; ++i) {
    plan.steps.push_back(
        view_step(i * cfg.mid_yaw_step, 0.0, cfg.mid_fov, cfg.view_size, PromptSlot::Scene));
    plan.steps.push_back(
        view_step(-i * cfg.mid_yaw_step, 0.0, cfg.mid_fov, cfg.view_size, PromptSlot::Scene));
  }
  plan.steps.push_back(view_step(4 * cfg.mid_yaw_step, 0.0, cfg.mid_fov, cfg.view_size,
                                 PromptSlot::Scene));
  return plan;
}

}  // namespace worldgen
