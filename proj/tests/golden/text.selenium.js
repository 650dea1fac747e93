await driver.wait(async () => {
  const e1 = await driver.findElements({ xpath: "//*[@id=\"age\"]" });
  if (e1.length === 0 || (await e1[0].getAttribute("textContent")) !== "23") return false;
  return true;
}, 4000, "wefix: explicit wait timed out", 100);
