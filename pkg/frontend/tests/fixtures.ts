import { Decision, MapData } from "../src/types.js";

export function fixtureMap(): MapData {
  const names = ["Africa", "America", "Asia", "Wetlands"];
  return {
    schema_version: 1,
    bounds: [0, 0, 4, 1],
    regions: names.map((name, i) => ({
      region_id: `r${i}`,
      class_label: name,
      display_name: name,
      polygon: [
        [i, 0],
        [i + 1, 0],
        [i + 1, 1],
        [i, 1],
      ] as [number, number][],
      adjacent: [i - 1, i + 1]
        .filter((j) => j >= 0 && j < names.length)
        .map((j) => `r${j}`),
      trivia: `Fish facts about ${name}.`,
    })),
  };
}

export function acceptedDecision(regionId = "r3", name = "Wetlands"): Decision {
  return {
    status: "accepted",
    region_id: regionId,
    display_name: name,
    confidence: 0.93,
    alternatives: [
      { class_label: name, region_id: regionId, score: 0.93 },
      { class_label: "Asia", region_id: "r2", score: 0.04 },
      { class_label: "Africa", region_id: "r0", score: 0.02 },
    ],
    map_highlight: [
      [3, 0],
      [4, 0],
      [4, 1],
      [3, 1],
    ],
    trivia: "Fish facts about Wetlands.",
    prior_applied: false,
    guidance: null,
  };
}

export function rejectedDecision(): Decision {
  return {
    status: "rejected",
    region_id: null,
    display_name: null,
    confidence: 0.21,
    alternatives: [
      { class_label: "Asia", region_id: "r2", score: 0.21 },
      { class_label: "Africa", region_id: "r0", score: 0.2 },
      { class_label: "America", region_id: "r1", score: 0.2 },
    ],
    map_highlight: null,
    trivia: null,
    prior_applied: false,
    guidance: "Tank not recognized. Step closer and retry.",
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
