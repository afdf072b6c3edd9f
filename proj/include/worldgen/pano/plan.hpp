#pragma once

#include <string>
#include <vector>

#include "worldgen/geometry/camera.hpp"

namespace worldgen {

enum class HeuristicKind { AdHoc, Sequential, Anchored };

std::string heuristic_to_string(HeuristicKind k);
HeuristicKind heuristic_from_string(const std::string& s);

enum class PromptSlot { Scene, Sky, Ground };

enum class AnchorAction { None, PlaceBackside, RemoveBackside };

struct PromptSet {
  std::string scene;
  std::string sky;     // "sky" / "ceiling" style text
  std::string ground;  // "ground" / "floor" style text
  const std::string& pick(PromptSlot slot) const {
    return slot == PromptSlot::Sky ? sky : slot == PromptSlot::Ground ? ground : scene;
  }
  bool operator==(const PromptSet&) const = default;
};

struct PlanStep {
  CameraPose pose;
  Intrinsics intr;
  PromptSlot prompt_slot = PromptSlot::Scene;
  AnchorAction anchor = AnchorAction::None;  // anchor steps issue no oracle call
  bool equirect_canvas = false;              // operate on the pano itself
};

struct PlanConfig {
  int view_size = 1024;
  double mid_fov = deg2rad(85.0);
  double polar_fov = deg2rad(120.0);
  double polar_pitch = deg2rad(60.0);
  double mid_yaw_step = deg2rad(45.0);
  // Sequential sweeps start offset from the input so each new view keeps
  // enough known context.
  double seq_first_yaw = deg2rad(40.0);
};

struct ViewPlan {
  HeuristicKind kind = HeuristicKind::Anchored;
  std::vector<PlanStep> steps;
  int inpaint_steps() const;
  int anchor_steps() const;
};

// The input view always sits at yaw 0, pitch 0; plans are built around it.
ViewPlan plan_views(HeuristicKind kind, const PlanConfig& cfg = {});

}  // namespace worldgen
