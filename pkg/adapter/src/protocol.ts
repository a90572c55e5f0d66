/**
 * Wire protocol framing: newline-delimited JSON control lines interleaved
 * with raw little-endian float32 voxel payloads (x-fastest order).
 */

export type Shape = [number, number, number]

export interface Handshake {
  proto: number
  shape: Shape
  dtype: string
}

export interface BatchHeader {
  id: number
  count?: number
}

export function voxelCount(shape: Shape): number {
  return shape[0] * shape[1] * shape[2]
}

export function parseFloat32Volume(buffer: Buffer): Float32Array {
  const out = new Float32Array(buffer.byteLength / 4)
  for (let i = 0, o = 0; i < out.length; ++i, o += 4) {
    out[i] = buffer.readFloatLE(o)
  }
  return out
}

/** Buffered async reader over a byte stream. */
export class StreamReader {
  private buffer: Buffer = Buffer.alloc(0)
  private ended = false
  private wake: (() => void) | null = null

  constructor(stream: NodeJS.ReadableStream) {
    stream.on('data', (chunk: Buffer) => {
      this.buffer = Buffer.concat([this.buffer, chunk])
      this.wake?.()
    })
    stream.on('end', () => {
      this.ended = true
      this.wake?.()
    })
  }

  private waitForData(): Promise<void> {
    return new Promise((resolve) => {
      this.wake = () => {
        this.wake = null
        resolve()
      }
    })
  }

  /** One UTF-8 line without the trailing newline; null at end of stream. */
  async readLine(): Promise<string | null> {
    for (;;) {
      const idx = this.buffer.indexOf(0x0a)
      if (idx >= 0) {
        const line = this.buffer.subarray(0, idx).toString('utf-8')
        this.buffer = this.buffer.subarray(idx + 1)
        return line
      }
      if (this.ended) {
        if (this.buffer.length === 0) return null
        const rest = this.buffer.toString('utf-8')
        this.buffer = Buffer.alloc(0)
        return rest
      }
      await this.waitForData()
    }
  }

  /** Exactly n bytes; throws if the stream ends first. */
  async readBytes(n: number): Promise<Buffer> {
    while (this.buffer.length < n) {
      if (this.ended) {
        throw new Error(`stream ended with ${this.buffer.length}/${n} bytes`)
      }
      await this.waitForData()
    }
    const out = this.buffer.subarray(0, n)
    this.buffer = this.buffer.subarray(n)
    return Buffer.from(out)
  }
}

export function writeLine(stream: NodeJS.WritableStream, obj: unknown): void {
  stream.write(JSON.stringify(obj) + '\n')
}
