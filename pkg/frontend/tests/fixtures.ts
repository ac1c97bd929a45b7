/** Shared document fixtures mirroring real service output shapes. */

import type { HierarchyDto, PresentationDto, SceneDto } from "../src/types.js";

export function hierarchyFixture(): HierarchyDto {
  return {
    categories: [
      {
        name: "characters",
        children: [
          { name: "boy", children: [], leaves: ["e-boy-1", "e-boy-2"] },
          { name: "dog", children: [], leaves: ["e-dog-1"] },
        ],
        leaves: [],
      },
      {
        name: "backgrounds",
        children: [{ name: "sky", children: [], leaves: ["e-sky-1"] }],
        leaves: [],
      },
      {
        name: "accessories",
        children: [
          {
            name: "plant",
            children: [{ name: "tree", children: [], leaves: ["e-tree-1"] }],
            leaves: [],
          },
        ],
        leaves: [],
      },
    ],
    scores: {},
    suppressed: [],
  };
}

export function sceneFixture(): SceneDto {
  const mk = (pid: string, eid: string, x: number, visible = true) => ({
    placement_id: pid,
    element_id: eid,
    x,
    y: 0,
    scale: 1,
    rotation: 0,
    flip_h: false,
    visible,
  });
  return {
    scene_id: "scn_test",
    canvas: { width: 1200, height: 800 },
    placements: [
      mk("p0001", "e-boy-1", 0),
      mk("p0002", "e-boy-2", 120),
      mk("p0003", "e-dog-1", 240),
      mk("p0004", "e-sky-1", 360),
      mk("p0005", "e-tree-1", 480),
    ],
    revision: 0,
  };
}

export function presentationFixture(): PresentationDto {
  return {
    session_id: "ses_test",
    present: "sized",
    layout: {
      canvas_width: 1200,
      tiles: [],
      cluster_order: [],
      mode: "sized",
      warnings: [],
    },
    hierarchy: hierarchyFixture(),
  };
}
