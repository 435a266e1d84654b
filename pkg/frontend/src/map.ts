// SVG coordinate-plane "map": synthetic corpora carry no tiles, so pins and
// clicks live on a plain lon/lat plane that fits its contents.

export interface Pin {
  lon: number;
  lat: number;
  label: string;
  kind: "query" | "candidate" | "result";
}

export interface Extent {
  minLon: number;
  minLat: number;
  maxLon: number;
  maxLat: number;
}

const PAD = 0.1;

export function fitExtent(pins: Pin[], fallback: Extent): Extent {
  if (pins.length === 0) {
    return fallback;
  }
  let minLon = Math.min(...pins.map((p) => p.lon));
  let maxLon = Math.max(...pins.map((p) => p.lon));
  let minLat = Math.min(...pins.map((p) => p.lat));
  let maxLat = Math.max(...pins.map((p) => p.lat));
  const padLon = Math.max(0.05, (maxLon - minLon) * PAD);
  const padLat = Math.max(0.05, (maxLat - minLat) * PAD);
  return {
    minLon: minLon - padLon,
    maxLon: maxLon + padLon,
    minLat: minLat - padLat,
    maxLat: maxLat + padLat,
  };
}

const WIDTH = 360;
const HEIGHT = 240;

function toX(extent: Extent, lon: number): number {
  return ((lon - extent.minLon) / (extent.maxLon - extent.minLon)) * WIDTH;
}

function toY(extent: Extent, lat: number): number {
  // SVG y grows downward, latitude grows upward
  return HEIGHT - ((lat - extent.minLat) / (extent.maxLat - extent.minLat)) * HEIGHT;
}

export function fromClick(extent: Extent, x: number, y: number): { lon: number; lat: number } {
  return {
    lon: extent.minLon + (x / WIDTH) * (extent.maxLon - extent.minLon),
    lat: extent.minLat + ((HEIGHT - y) / HEIGHT) * (extent.maxLat - extent.minLat),
  };
}

export function renderMap(pins: Pin[], extent: Extent, clickable: boolean): string {
  const dots = pins
    .map((p) => {
      const x = toX(extent, p.lon).toFixed(1);
      const y = toY(extent, p.lat).toFixed(1);
      const cls = `pin pin-${p.kind}`;
      const r = p.kind === "query" ? 6 : 4;
      return (
        `<circle class="${cls}" cx="${x}" cy="${y}" r="${r}">` +
        `<title>${p.label}</title></circle>`
      );
    })
    .join("");
  return (
    `<svg class="map${clickable ? " map-clickable" : ""}" data-role="map" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" width="${WIDTH}" height="${HEIGHT}">` +
    `<rect class="map-bg" x="0" y="0" width="${WIDTH}" height="${HEIGHT}"></rect>` +
    dots +
    `</svg>`
  );
}

export const MAP_WIDTH = WIDTH;
export const MAP_HEIGHT = HEIGHT;
