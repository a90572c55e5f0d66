/**
 * CLI entry: rex3d-adapter --shape X,Y,Z --classifier <module:export>
 *
 * The classifier module is imported dynamically; the named export must be a
 * (Float32Array, shape) => [label, confidence] callable. Built-ins resolve
 * as "builtin:sphere", "builtin:constantZero", "builtin:constantOne".
 */

import { pathToFileURL } from 'node:url'
import { resolve } from 'node:path'

import * as builtins from './classifiers.js'
import type { Classifier } from './classifiers.js'
import type { Shape } from './protocol.js'
import { serve } from './serve.js'

function parseArgs(argv: string[]): { shape: Shape; classifier: string } {
  let shape: Shape | null = null
  let classifier: string | null = null
  for (let i = 0; i < argv.length; ++i) {
    if (argv[i] === '--shape') {
      const parts = argv[++i].split(',').map(Number)
      if (parts.length !== 3 || parts.some((p) => !Number.isInteger(p) || p < 1)) {
        throw new Error(`bad --shape: ${argv[i]}`)
      }
      shape = parts as Shape
    } else if (argv[i] === '--classifier') {
      classifier = argv[++i]
    } else {
      throw new Error(`unknown argument: ${argv[i]}`)
    }
  }
  if (!shape || !classifier) {
    throw new Error('usage: --shape X,Y,Z --classifier <module:export>')
  }
  return { shape, classifier }
}

async function loadClassifier(source: string): Promise<Classifier> {
  const sep = source.lastIndexOf(':')
  if (sep < 0) throw new Error(`classifier must be <module:export>: ${source}`)
  const modulePath = source.slice(0, sep)
  const exportName = source.slice(sep + 1)
  const mod =
    modulePath === 'builtin'
      ? builtins
      : await import(pathToFileURL(resolve(modulePath)).href)
  const fn = (mod as Record<string, unknown>)[exportName]
  if (typeof fn !== 'function') {
    throw new Error(`no callable export ${exportName} in ${modulePath}`)
  }
  return fn as Classifier
}

async function main(): Promise<number> {
  let config
  try {
    const args = parseArgs(process.argv.slice(2))
    config = { shape: args.shape, classifier: await loadClassifier(args.classifier) }
  } catch (err) {
    process.stderr.write(`${err}\n`)
    return 1
  }
  return serve(config, process.stdin, process.stdout)
}

main().then((code) => {
  process.exitCode = code
})
