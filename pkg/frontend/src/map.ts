import { MapData, Region } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface MapView {
  /** Visually mark one region (or none). */
  highlight(regionId: string | null): void;
  svg: SVGSVGElement;
}

/** Draw every region polygon into `container` as an interactive SVG.
 *  Tapping a region reports it to `onTap` (browse mode). */
export function renderMap(
  container: HTMLElement,
  map: MapData,
  onTap: (region: Region) => void = () => {},
): MapView {
  container.textContent = "";
  const svg = document.createElementNS(SVG_NS, "svg");
  const [minX, minY, maxX, maxY] = map.bounds;
  svg.setAttribute("viewBox", `${minX} ${minY} ${maxX - minX} ${maxY - minY}`);
  svg.setAttribute("preserveAspectRatio", "xMidYMid meet");
  svg.classList.add("park-map");

  for (const region of map.regions) {
    const polygon = document.createElementNS(SVG_NS, "polygon");
    polygon.setAttribute("points", region.polygon.map(([x, y]) => `${x},${y}`).join(" "));
    polygon.dataset.regionId = region.region_id;
    polygon.classList.add("region");
    polygon.addEventListener("click", () => onTap(region));
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = region.display_name;
    polygon.appendChild(title);
    svg.appendChild(polygon);
  }
  container.appendChild(svg);

  return {
    svg,
    highlight(regionId: string | null): void {
      for (const el of svg.querySelectorAll<SVGPolygonElement>("polygon.region")) {
        el.classList.toggle("highlight", el.dataset.regionId === regionId);
      }
    },
  };
}
