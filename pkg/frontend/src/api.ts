import { Decision, DecisionSchema, MapData, MapDataSchema } from "./types.js";

// The only three endpoints this UI ever talks to.
export const MAP_ENDPOINT = "/api/v1/map";
export const LOCALIZE_ENDPOINT = "/api/v1/localize";
export const HEALTH_ENDPOINT = "/api/v1/health";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
    public readonly errorCode: string | null = null,
  ) {
    super(message);
  }
}

async function errorFrom(res: Response): Promise<ApiError> {
  let code: string | null = null;
  let message = `request failed with status ${res.status}`;
  try {
    const body = (await res.json()) as { error_code?: string; message?: string };
    code = body.error_code ?? null;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(message, res.status, code);
}

export async function fetchMap(baseUrl = ""): Promise<MapData> {
  const res = await fetch(baseUrl + MAP_ENDPOINT);
  if (!res.ok) throw await errorFrom(res);
  return MapDataSchema.parse(await res.json());
}

/** POST a photo; prevRegion rides along so the server can apply its
 *  map-adjacency prior. The server decides everything. */
export async function localizePhoto(
  photo: Blob,
  prevRegion: string | null,
  baseUrl = "",
): Promise<Decision> {
  const form = new FormData();
  form.append("image", photo, "photo.jpg");
  if (prevRegion !== null) {
    form.append("prev_region", prevRegion);
  }
  const res = await fetch(baseUrl + LOCALIZE_ENDPOINT, { method: "POST", body: form });
  if (!res.ok) throw await errorFrom(res);
  return DecisionSchema.parse(await res.json());
}
