/** Source panel: browse the imported collection and submit a story. */

import type { ApiClient } from "./api.js";
import type { CollectionDto } from "./types.js";

export const DEFAULT_STORY_INSTRUCTION =
  "Describe your story. Include the visual elements you want as characters, " +
  "background, and accessories.";

export interface SourceCallbacks {
  onSubmit: (story: string, mode: "full" | "keyword_only", present: "sized" | "uniform") => void;
}

export class SourcePanel {
  readonly root: HTMLElement;
  readonly storyBox: HTMLTextAreaElement;
  readonly modePicker: HTMLSelectElement;
  readonly status: HTMLElement;

  constructor(
    container: HTMLElement,
    private api: ApiClient,
    callbacks: SourceCallbacks,
  ) {
    this.root = document.createElement("div");
    this.root.className = "source-panel";

    const gallery = document.createElement("div");
    gallery.className = "collection-gallery";
    this.root.appendChild(gallery);

    this.storyBox = document.createElement("textarea");
    this.storyBox.className = "story-input";
    this.storyBox.placeholder = DEFAULT_STORY_INSTRUCTION;
    this.storyBox.rows = 4;
    this.root.appendChild(this.storyBox);

    // study-style switcher: selection mode x presentation mode
    this.modePicker = document.createElement("select");
    this.modePicker.className = "mode-picker";
    for (const [value, label] of [
      ["full/sized", "full selection, sized grid"],
      ["keyword_only/sized", "keyword-only selection, sized grid"],
      ["full/uniform", "full selection, uniform grid"],
    ] as const) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = label;
      this.modePicker.appendChild(option);
    }
    this.root.appendChild(this.modePicker);

    const submit = document.createElement("button");
    submit.className = "submit-story";
    submit.textContent = "Submit";
    submit.addEventListener("click", () => {
      const story = this.storyBox.value.trim();
      if (!story) {
        this.setStatus("enter a story first");
        return;
      }
      const [mode, present] = this.modePicker.value.split("/") as [
        "full" | "keyword_only",
        "sized" | "uniform",
      ];
      callbacks.onSubmit(story, mode, present);
    });
    this.root.appendChild(submit);

    this.status = document.createElement("div");
    this.status.className = "source-status";
    this.root.appendChild(this.status);

    container.appendChild(this.root);
  }

  setStatus(text: string): void {
    this.status.textContent = text;
  }

  showCollection(collection: CollectionDto): void {
    const gallery = this.root.querySelector(".collection-gallery");
    if (!gallery) return;
    gallery.textContent = "";
    for (const image of collection.images) {
      const thumb = document.createElement("img");
      thumb.className = "collection-thumb";
      thumb.src = this.api.imageUrl(collection.collection_id, image.image_id);
      thumb.title = image.image_id;
      gallery.appendChild(thumb);
    }
  }
}
