/**
 * Built-in classifier callables. A classifier maps an (x, y, z) float32
 * volume (x-fastest order) to a [label, confidence] pair.
 */

import type { Shape } from './protocol.js'

export type Classifier = (data: Float32Array, shape: Shape) => [number, number]

export const constantZero: Classifier = () => [0, 1.0]

export const constantOne: Classifier = () => [1, 1.0]

function sigmoid10(x: number): number {
  return 1.0 / (1.0 + Math.exp(-10.0 * x))
}

/**
 * Mean-over-ball threshold: label 1 iff the mean intensity inside the
 * Euclidean ball at the volume center (radius = x-extent / 4) exceeds 0.5.
 */
export const sphere: Classifier = (data, shape) => {
  const center = [shape[0] / 2, shape[1] / 2, shape[2] / 2]
  const radius = shape[0] / 4
  const tau = 0.5
  let sum = 0
  let count = 0
  for (let z = 0; z < shape[2]; ++z) {
    for (let y = 0; y < shape[1]; ++y) {
      for (let x = 0; x < shape[0]; ++x) {
        const d2 =
          (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2
        if (d2 <= radius * radius) {
          sum += data[x + shape[0] * (y + shape[1] * z)]
          count += 1
        }
      }
    }
  }
  const stat = sum / count
  return [stat > tau ? 1 : 0, sigmoid10(stat - tau)]
}
