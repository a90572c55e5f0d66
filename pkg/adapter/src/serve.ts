/**
 * Server side of the oracle wire protocol.
 *
 * 1. Client handshake: {"proto":1,"shape":[x,y,z],"dtype":"f32le"}\n
 * 2. Reply: {"proto":1,"ok":true}\n or {"ok":false,"error":"..."}\n
 * 3. Per batch: {"id":n,"count":k}\n + k*x*y*z*4 bytes of f32le voxels
 * 4. Reply: {"id":n,"labels":[...],"confidences":[...]}\n
 * 5. {"id":-1}\n terminates with exit 0.
 */

import type { Classifier } from './classifiers.js'
import {
  BatchHeader,
  Handshake,
  Shape,
  StreamReader,
  parseFloat32Volume,
  voxelCount,
  writeLine,
} from './protocol.js'

export interface AdapterConfig {
  shape: Shape
  classifier: Classifier
}

export type ExitCode = 0 | 1

function shapesEqual(a: Shape, b: number[]): boolean {
  return b.length === 3 && a.every((v, i) => v === b[i])
}

export async function serve(
  config: AdapterConfig,
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream
): Promise<ExitCode> {
  const reader = new StreamReader(input)

  const handshakeLine = await reader.readLine()
  if (handshakeLine === null) {
    return 1
  }
  let handshake: Handshake
  try {
    handshake = JSON.parse(handshakeLine)
  } catch {
    writeLine(output, { ok: false, error: 'malformed handshake' })
    return 1
  }
  if (
    handshake.proto !== 1 ||
    handshake.dtype !== 'f32le' ||
    !shapesEqual(config.shape, handshake.shape)
  ) {
    writeLine(output, {
      ok: false,
      error: `expected proto 1, dtype f32le, shape ${config.shape}`,
    })
    return 1
  }
  writeLine(output, { proto: 1, ok: true })

  const bytesPerVolume = voxelCount(config.shape) * 4
  for (;;) {
    const line = await reader.readLine()
    if (line === null) return 1
    const header: BatchHeader = JSON.parse(line)
    if (header.id === -1) return 0

    const labels: number[] = []
    const confidences: number[] = []
    try {
      for (let i = 0; i < (header.count ?? 0); ++i) {
        const volume = parseFloat32Volume(await reader.readBytes(bytesPerVolume))
        const [label, confidence] = config.classifier(volume, config.shape)
        labels.push(label)
        confidences.push(confidence)
      }
    } catch (err) {
      writeLine(output, { id: header.id, error: String(err) })
      return 1
    }
    writeLine(output, { id: header.id, labels, confidences })
  }
}
