/** Scene synchronization with optimistic concurrency.
 *
 * Ops are sent with the revision they were built against. On a 409 the
 * current scene is refetched and ops that still make sense (their placement
 * ids survive) are retried once against the fresh revision; anything else
 * surfaces to the user. The server document is the single source of truth.
 */

import type { ApiClient } from "./api.js";
import type { SceneDto, SceneOp } from "./types.js";

export type SceneListener = (scene: SceneDto) => void;

function opPlacementId(op: SceneOp): string | null {
  if ("placement_id" in op) return op.placement_id;
  if (op.op === "set_visible") return op.target;
  return null;
}

export function rebaseOps(ops: SceneOp[], fresh: SceneDto): { kept: SceneOp[]; dropped: SceneOp[] } {
  const alive = new Set(fresh.placements.map((p) => p.placement_id));
  const kept: SceneOp[] = [];
  const dropped: SceneOp[] = [];
  for (const op of ops) {
    const pid = opPlacementId(op);
    if (op.op === "reorder") {
      dropped.push(op); // index-based; meaningless after concurrent edits
    } else if (pid === null || alive.has(pid) || (op.op === "set_visible" && !pid.startsWith("p"))) {
      kept.push(op);
    } else {
      dropped.push(op);
    }
  }
  return { kept, dropped };
}

export class SceneSync {
  scene: SceneDto | null = null;
  private listeners: SceneListener[] = [];

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private notify: (message: string) => void = () => undefined,
  ) {}

  onChange(listener: SceneListener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    if (this.scene) for (const listener of this.listeners) listener(this.scene);
  }

  async load(): Promise<SceneDto> {
    this.scene = await this.api.getScene(this.sessionId);
    this.emit();
    return this.scene;
  }

  /** Apply a batch; resolves once the server accepted (possibly after one
   * rebase-and-retry) or the batch was abandoned with a notification. */
  async apply(ops: SceneOp[]): Promise<boolean> {
    if (!this.scene || ops.length === 0) return false;
    const result = await this.api.postOps(this.sessionId, this.scene.revision, ops);
    if (result.ok) {
      this.scene = result.scene;
      this.emit();
      return true;
    }
    const fresh = await this.api.getScene(this.sessionId);
    const { kept, dropped } = rebaseOps(ops, fresh);
    this.scene = fresh;
    if (kept.length > 0) {
      const retry = await this.api.postOps(this.sessionId, fresh.revision, kept);
      if (retry.ok) {
        this.scene = retry.scene;
        this.emit();
        if (dropped.length > 0) {
          this.notify(`${dropped.length} change(s) no longer applied after a concurrent edit`);
        }
        return true;
      }
    }
    this.emit();
    this.notify("scene changed concurrently; your edit was not applied");
    return false;
  }
}
