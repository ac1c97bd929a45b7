/** Application wiring: source panel -> job polling -> layer panel (linked
 * tree + canvas) -> export. All document state lives on the server; the
 * client holds only the current selection and view toggles. */

import { ApiClient } from "./api.js";
import { CanvasView } from "./canvas.js";
import { SourcePanel } from "./source.js";
import { SceneSync } from "./sync.js";
import { TreeView } from "./tree.js";
import type { PresentationDto } from "./types.js";

export interface AppConfig {
  apiBase: string;
  libraryId?: string;
  collectionId?: string;
  seed?: number;
}

export class App {
  readonly api: ApiClient;
  readonly root: HTMLElement;
  source!: SourcePanel;
  tree!: TreeView;
  canvas!: CanvasView;
  sync: SceneSync | null = null;
  sessionId = "";
  presentation: PresentationDto | null = null;

  constructor(
    container: HTMLElement,
    private config: AppConfig,
    api?: ApiClient,
  ) {
    this.api = api ?? new ApiClient(config.apiBase);
    this.root = document.createElement("div");
    this.root.className = "app";
    container.appendChild(this.root);
    this.buildSourceView();
  }

  private buildSourceView(): void {
    this.root.textContent = "";
    const panel = document.createElement("div");
    panel.className = "view view-source";
    this.root.appendChild(panel);
    this.source = new SourcePanel(panel, this.api, {
      onSubmit: (story, mode, present) => void this.submitStory(story, mode, present),
    });
    if (this.config.collectionId) {
      void this.api
        .getCollection(this.config.collectionId)
        .then((collection) => this.source.showCollection(collection))
        .catch((error) => this.source.setStatus(`collection: ${error.message}`));
    }
  }

  async submitStory(
    story: string,
    mode: "full" | "keyword_only",
    present: "sized" | "uniform",
  ): Promise<void> {
    if (!this.config.libraryId) {
      this.source.setStatus("no library configured (set ?library=<id>)");
      return;
    }
    this.source.setStatus("preparing assets…");
    try {
      const created = await this.api.createSession({
        library_id: this.config.libraryId,
        story,
        mode,
        present,
        seed: this.config.seed,
      });
      const job = await this.api.waitForJob(created.job_id);
      if (job.state === "failed") {
        this.source.setStatus(`preparation failed: ${job.error}`);
        return;
      }
      await this.openSession(created.session_id);
    } catch (error) {
      this.source.setStatus(`request failed: ${(error as Error).message}`);
    }
  }

  /** Load an existing session into the layer panel (also used on reload). */
  async openSession(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    this.presentation = await this.api.getPresentation(sessionId);
    this.buildLayerView();
    this.sync = new SceneSync(this.api, sessionId, (message) => this.notify(message));
    this.sync.onChange((scene) => {
      this.tree.setScene(scene);
      this.canvas.setScene(scene);
    });
    await this.sync.load();
  }

  private buildLayerView(): void {
    this.root.textContent = "";
    const view = document.createElement("div");
    view.className = "view view-layers";

    const side = document.createElement("div");
    side.className = "side-pane";
    const main = document.createElement("div");
    main.className = "main-pane";
    view.appendChild(side);
    view.appendChild(main);
    this.root.appendChild(view);

    const exportButton = document.createElement("button");
    exportButton.className = "export-button";
    exportButton.textContent = "Export";
    exportButton.addEventListener("click", () => void this.exportBundle());
    side.appendChild(exportButton);

    this.tree = new TreeView(side, {
      onOps: (ops) => void this.sync?.apply(ops),
      onSelectLeaf: (elementId) => this.canvas.highlightElement(elementId),
      cutoutUrl: (elementId) => this.api.cutoutUrl(this.sessionId, elementId),
    });
    this.canvas = new CanvasView(main, this.api, {
      onOps: (ops) => void this.sync?.apply(ops),
      onSelectPlacement: (elementId) => this.tree.highlightLeaf(elementId),
    });
    this.canvas.setSession(this.sessionId);
    if (this.presentation) this.tree.setHierarchy(this.presentation.hierarchy);
  }

  async exportBundle(): Promise<void> {
    try {
      await this.api.exportSession(this.sessionId);
      const link = document.createElement("a");
      link.href = this.api.archiveUrl(this.sessionId);
      link.download = `${this.sessionId}.zip`;
      this.root.appendChild(link);
      link.click();
      link.remove();
      this.notify("bundle exported");
    } catch (error) {
      this.notify(`export failed: ${(error as Error).message}`);
    }
  }

  notify(message: string): void {
    let bar = this.root.querySelector<HTMLElement>(".notice-bar");
    if (!bar) {
      bar = document.createElement("div");
      bar.className = "notice-bar";
      this.root.appendChild(bar);
    }
    bar.textContent = message;
  }
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const config: AppConfig = {
    apiBase: params.get("api") ?? "http://127.0.0.1:8000",
    libraryId: params.get("library") ?? undefined,
    collectionId: params.get("collection") ?? undefined,
    seed: params.get("seed") ? Number(params.get("seed")) : undefined,
  };
  const app = new App(document.body, config);
  const sessionId = params.get("session");
  if (sessionId) void app.openSession(sessionId);
}

