/** Wire DTOs mirroring the service's JSON documents. */

export interface TileDto {
  element_id: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface LayoutDto {
  canvas_width: number;
  tiles: TileDto[];
  cluster_order: string[];
  mode: string;
  warnings: string[];
}

export interface ClusterDto {
  name: string;
  children: ClusterDto[];
  leaves: string[];
}

export interface ScoreDto {
  s_div: number;
  s_cns: number;
  s_res: number;
  s_total: number;
  height: number;
}

export interface HierarchyDto {
  categories: ClusterDto[];
  scores: Record<string, ScoreDto>;
  suppressed: string[];
}

export interface PresentationDto {
  session_id: string;
  present: string;
  layout: LayoutDto;
  hierarchy: HierarchyDto;
}

export interface PlacementDto {
  placement_id: string;
  element_id: string;
  x: number;
  y: number;
  scale: number;
  rotation: number;
  flip_h: boolean;
  visible: boolean;
}

export interface SceneDto {
  scene_id: string;
  canvas: { width: number; height: number };
  placements: PlacementDto[];
  revision: number;
}

export interface JobDto {
  job_id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  result: Record<string, unknown> | null;
  error: string | null;
}

export interface CollectionDto {
  collection_id: string;
  images: { image_id: string; path: string; width: number; height: number }[];
}

export type SceneOp =
  | { op: "place"; element_id: string; x: number; y: number; scale?: number }
  | { op: "copy"; placement_id: string }
  | { op: "delete"; placement_id: string }
  | { op: "move"; placement_id: string; x: number; y: number }
  | { op: "scale"; placement_id: string; factor: number }
  | { op: "flip_h"; placement_id: string }
  | { op: "rotate"; placement_id: string; degrees: number }
  | { op: "set_visible"; target: string; visible: boolean }
  | { op: "reorder"; placement_id: string; new_index: number };

export interface SessionRequest {
  library_id: string;
  story: string;
  mode: "full" | "keyword_only";
  present: "sized" | "uniform";
  seed?: number;
}
