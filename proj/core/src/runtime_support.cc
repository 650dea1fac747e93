#include "wefix/runtime_support.h"

namespace wefix {
namespace {

// Shared by both dialects: decoding of record cookies and the listen window.
constexpr std::string_view kCommon = R"js(
const PREFIX = "__wefix__";
const RECORD_PREFIX = "__wefix__r";
const POLL_MS = 50;
const INITIAL_S = 1;
const CAP_S = 20;

function decodeRecord(value) {
  const b64 = value.replace(/-/g, "+").replace(/_/g, "/");
  const padded = b64 + "===".slice((b64.length + 3) % 4);
  const bytes = typeof atob === "function"
      ? Uint8Array.from(atob(padded), (c) => c.charCodeAt(0))
      : Buffer.from(padded, "base64");
  return JSON.parse(new TextDecoder().decode(bytes));
}

function recordsFrom(cookies, sinceSeq) {
  const out = [];
  for (const c of cookies) {
    if (!c.name.startsWith(RECORD_PREFIX)) continue;
    const seq = Number(c.name.slice(RECORD_PREFIX.length));
    if (!(seq > sinceSeq)) continue;
    try {
      const rec = decodeRecord(c.value);
      rec.seq = seq;
      out.push(rec);
    } catch (e) {
      // A half-written cookie; it is picked up again on the next poll.
    }
  }
  return out.sort((a, b) => a.seq - b.seq);
}

// One step of the dynamic listen window. Returns the new window in seconds.
function widen(omega, relS) {
  return Math.min(CAP_S, Math.max(2 * Math.max(0, relS), omega));
}

function mutationLine(cmdId, rec, settle, omega) {
  const line = Object.assign({ record: "mutation", cmd_id: cmdId }, rec);
  if ((rec.t_ms - settle) / 1000 >= omega) line.late = true;
  return JSON.stringify(line);
}
)js";

constexpr std::string_view kSelenium = R"js(
const fs = require("fs");
const path = require("path");

const LOG = process.env.WEFIX_LOG || path.join(process.cwd(), "mutation.log");
let shim = null;
try {
  shim = require("./wefix-shim.js");
} catch (e) {
  console.warn("wefix: wefix-shim.js not found, recording commands only");
}

const state = { nextId: 1, current: null, started: false };

function driverOf(handle) {
  return typeof handle.getDriver === "function" ? handle.getDriver() : handle;
}

function append(obj) {
  fs.appendFileSync(LOG, (typeof obj === "string" ? obj : JSON.stringify(obj)) + "\n");
}

function start() {
  if (state.started) return;
  state.started = true;
  fs.writeFileSync(LOG, "");
  append({
    record: "meta",
    version: 1,
    suite: process.env.WEFIX_SUITE || path.basename(process.cwd()),
    started_at_ms: Date.now(),
  });
}

async function install(driver) {
  if (!shim) return;
  try {
    await driver.executeScript("(" + shim.install.toString() + ")(window);");
  } catch (e) {
    // No page yet; the post hook tries again.
  }
}

async function cookies(driver) {
  try {
    return await driver.manage().getCookies();
  } catch (e) {
    return [];
  }
}

async function clearChannel(driver) {
  for (const c of await cookies(driver)) {
    if (c.name.startsWith(PREFIX)) await driver.manage().deleteCookie(c.name);
  }
}

async function pre(handle, site, name, loc) {
  const driver = driverOf(handle);
  start();
  await install(driver);
  await clearChannel(driver);
  state.current = { id: state.nextId++, site };
  append({ record: "cmd_start", cmd_id: state.current.id, name, loc, t_ms: Date.now() });
}

async function post(handle, site) {
  const driver = driverOf(handle);
  const cur = state.current;
  if (!cur || cur.site !== site) return;
  state.current = null;
  const settle = Date.now();
  append({ record: "cmd_settle", cmd_id: cur.id, t_ms: settle });
  await install(driver);
  let omega = INITIAL_S;
  let since = 0;
  const captured = [];
  const take = (recs) => {
    for (const rec of recs) {
      since = rec.seq;
      const rel = (rec.t_ms - settle) / 1000;
      if (rel < omega) omega = widen(omega, rel);
      captured.push(rec);
    }
  };
  while (Date.now() - settle < omega * 1000) {
    take(recordsFrom(await cookies(driver), since));
    await new Promise((r) => setTimeout(r, POLL_MS));
  }
  take(recordsFrom(await cookies(driver), since));
  for (const rec of captured) append(mutationLine(cur.id, rec, settle, omega));
  append({
    record: "window_close",
    cmd_id: cur.id,
    t_ms: settle + Math.round(omega * 1000),
    omega_s: omega,
  });
}

module.exports = { pre, post };
)js";

constexpr std::string_view kCypress = R"js(
const LOG = Cypress.env("WEFIX_LOG") || "mutation.log";
let shim = null;
try {
  shim = require("./wefix-shim.js");
} catch (e) {
  shim = null;
}

const state = { nextId: 1, current: null, started: false };
const quiet = { log: false };

function append(obj) {
  const line = (typeof obj === "string" ? obj : JSON.stringify(obj)) + "\n";
  return cy.writeFile(LOG, line, { flag: "a+", log: false });
}

function start() {
  if (state.started) return;
  state.started = true;
  cy.writeFile(LOG, "", quiet);
  append({
    record: "meta",
    version: 1,
    suite: Cypress.spec.name,
    started_at_ms: Date.now(),
  });
}

function install() {
  if (!shim) return;
  cy.window(quiet).then((win) => {
    shim.install(win);
  });
}

function pre(site, name, loc) {
  start();
  install();
  cy.getCookies(quiet).then((all) => {
    for (const c of all) {
      if (c.name.startsWith(PREFIX)) cy.clearCookie(c.name, quiet);
    }
  });
  cy.then(() => {
    state.current = { id: state.nextId++, site };
    append({ record: "cmd_start", cmd_id: state.current.id, name, loc, t_ms: Date.now() });
  });
}

function post(site) {
  cy.then(() => {
    const cur = state.current;
    if (!cur || cur.site !== site) return;
    state.current = null;
    const w = { settle: Date.now(), omega: INITIAL_S, since: 0, captured: [] };
    append({ record: "cmd_settle", cmd_id: cur.id, t_ms: w.settle });
    install();
    const take = (all) => {
      for (const rec of recordsFrom(all, w.since)) {
        w.since = rec.seq;
        const rel = (rec.t_ms - w.settle) / 1000;
        if (rel < w.omega) w.omega = widen(w.omega, rel);
        w.captured.push(rec);
      }
    };
    const listen = () =>
      cy.getCookies(quiet).then((all) => {
        take(all);
        if (Date.now() - w.settle < w.omega * 1000) {
          return cy.wait(POLL_MS, quiet).then(listen);
        }
        for (const rec of w.captured) append(mutationLine(cur.id, rec, w.settle, w.omega));
        return append({
          record: "window_close",
          cmd_id: cur.id,
          t_ms: w.settle + Math.round(w.omega * 1000),
          omega_s: w.omega,
        });
      });
    return listen();
  });
}

module.exports = { pre, post };
)js";

}  // namespace

std::string RuntimeHelperSource(Dialect dialect) {
  std::string out =
      "// wefix recording runtime (" + std::string(DialectName(dialect)) +
      "). Generated file; do not edit.\n\"use strict\";\n";
  out += kCommon;
  out += dialect == Dialect::kSelenium ? kSelenium : kCypress;
  return out;
}

}  // namespace wefix
