/** Typed client for the flashlab relighting service. The editor never
 * computes relighting math itself; every pixel it shows came from here. */

export interface SceneInfo {
  id: string;
  width: number;
  height: number;
  kelvin: number;
  has_decomposition: boolean;
}

export interface RelightParams {
  scene_id: string;
  kappa: number;
  alpha: number;
  kelvin: number;
}

export type ComponentName = "P" | "A" | "F" | "R" | "S_A" | "S_F";

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function errorOf(resp: Response): Promise<ServiceError> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") detail = body.error;
  } catch {
    /* non-JSON error body */
  }
  return new ServiceError(resp.status, detail);
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async listScenes(): Promise<SceneInfo[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/scenes`);
    if (!resp.ok) throw await errorOf(resp);
    return (await resp.json()) as SceneInfo[];
  }

  componentUrl(sceneId: string, name: ComponentName): string {
    return `${this.baseUrl}/api/scenes/${encodeURIComponent(sceneId)}/component/${name}`;
  }

  async fetchComponent(sceneId: string, name: ComponentName, signal?: AbortSignal): Promise<Blob> {
    const resp = await this.fetchFn(this.componentUrl(sceneId, name), { signal });
    if (!resp.ok) throw await errorOf(resp);
    return await resp.blob();
  }

  async relight(params: RelightParams, signal?: AbortSignal): Promise<Blob> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/relight`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(params),
      signal,
    });
    if (!resp.ok) throw await errorOf(resp);
    return await resp.blob();
  }
}
