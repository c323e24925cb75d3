import { z } from "zod";

// Schemas mirror the localization API exactly; the UI never invents or
// reinterprets decision fields.

export const RegionSchema = z.object({
  region_id: z.string(),
  class_label: z.string(),
  display_name: z.string(),
  polygon: z.array(z.tuple([z.number(), z.number()])).min(3),
  adjacent: z.array(z.string()),
  trivia: z.string(),
});

export const MapDataSchema = z.object({
  schema_version: z.number(),
  bounds: z.tuple([z.number(), z.number(), z.number(), z.number()]),
  regions: z.array(RegionSchema).min(1),
});

export const AlternativeSchema = z.object({
  class_label: z.string(),
  region_id: z.string().nullish(),
  score: z.number(),
});

export const DecisionSchema = z.object({
  status: z.enum(["accepted", "rejected"]),
  region_id: z.string().nullish(),
  display_name: z.string().nullish(),
  confidence: z.number(),
  alternatives: z.array(AlternativeSchema),
  map_highlight: z.array(z.tuple([z.number(), z.number()])).nullish(),
  trivia: z.string().nullish(),
  prior_applied: z.boolean(),
  guidance: z.string().nullish(),
});

export type Region = z.infer<typeof RegionSchema>;
export type MapData = z.infer<typeof MapDataSchema>;
export type Decision = z.infer<typeof DecisionSchema>;
