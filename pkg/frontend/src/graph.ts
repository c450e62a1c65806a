/** Deterministic force layout for small scope graphs.
 *
 * Spring-electrical model: node pairs repel with k²/d, edges pull with
 * d²/k, positions cool over a fixed iteration count. Initial placement
 * hashes node ids onto a circle, so the same scope always lays out the
 * same way — no randomness, layouts are reproducible across sessions. */

export interface Point {
  x: number;
  y: number;
}

export interface LayoutEdge {
  source: string;
  target: string;
}

function hashAngle(id: string): number {
  let h = 2166136261;
  for (let i = 0; i < id.length; i++) {
    h ^= id.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  return ((h >>> 0) % 3600) / 3600 * 2 * Math.PI;
}

export function layoutGraph(
  nodeIds: string[],
  edges: LayoutEdge[],
  width = 640,
  height = 420,
  iterations = 200,
): Map<string, Point> {
  const positions = new Map<string, Point>();
  if (nodeIds.length === 0) return positions;

  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 3;
  nodeIds.forEach((id, i) => {
    // hashed angle plus index-scaled radius breaks exact overlaps
    const angle = hashAngle(id);
    const r = radius * (0.55 + 0.45 * ((i + 1) / nodeIds.length));
    positions.set(id, { x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) });
  });
  if (nodeIds.length === 1) return positions;

  const k = Math.sqrt((width * height) / nodeIds.length) / 2;
  let temperature = Math.min(width, height) / 10;
  const cooling = temperature / (iterations + 1);

  for (let iter = 0; iter < iterations; iter++) {
    const force = new Map<string, Point>(nodeIds.map((id) => [id, { x: 0, y: 0 }]));

    for (let i = 0; i < nodeIds.length; i++) {
      for (let j = i + 1; j < nodeIds.length; j++) {
        const a = positions.get(nodeIds[i]!)!;
        const b = positions.get(nodeIds[j]!)!;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        let dist = Math.hypot(dx, dy);
        if (dist < 0.01) {
          // deterministic nudge for coincident points
          dx = 0.01 * (i + 1);
          dy = 0.01 * (j + 1);
          dist = Math.hypot(dx, dy);
        }
        const repulse = (k * k) / dist;
        const fa = force.get(nodeIds[i]!)!;
        const fb = force.get(nodeIds[j]!)!;
        fa.x += (dx / dist) * repulse;
        fa.y += (dy / dist) * repulse;
        fb.x -= (dx / dist) * repulse;
        fb.y -= (dy / dist) * repulse;
      }
    }

    for (const edge of edges) {
      const a = positions.get(edge.source);
      const b = positions.get(edge.target);
      if (!a || !b || edge.source === edge.target) continue;
      const dx = a.x - b.x;
      const dy = a.y - b.y;
      const dist = Math.max(Math.hypot(dx, dy), 0.01);
      const attract = (dist * dist) / k;
      const fa = force.get(edge.source)!;
      const fb = force.get(edge.target)!;
      fa.x -= (dx / dist) * attract;
      fa.y -= (dy / dist) * attract;
      fb.x += (dx / dist) * attract;
      fb.y += (dy / dist) * attract;
    }

    for (const id of nodeIds) {
      const p = positions.get(id)!;
      const f = force.get(id)!;
      const magnitude = Math.max(Math.hypot(f.x, f.y), 0.01);
      const step = Math.min(magnitude, temperature);
      p.x += (f.x / magnitude) * step;
      p.y += (f.y / magnitude) * step;
      p.x = Math.min(width - 20, Math.max(20, p.x));
      p.y = Math.min(height - 20, Math.max(20, p.y));
    }
    temperature -= cooling;
  }
  return positions;
}
