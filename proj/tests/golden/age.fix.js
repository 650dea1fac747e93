it('shows the age of Bob', async () => {
  const driver = await new Builder().forBrowser('chrome').build();
  await driver.get('http://localhost:5000');
  await driver.findElement(By.id('name'))
    .sendKeys('Bob', Key.ENTER);
  /* wefix:begin wait 2 */
  await driver.wait(async () => {
    const e1 = await driver.findElements({ xpath: "//*[@id=\"age\"]" });
    if (e1.length === 0 || (await e1[0].getAttribute("textContent")) !== "23") return false;
    return true;
  }, 4000, "wefix: explicit wait timed out", 100);
  /* wefix:end */
  expect(await driver.findElement(By.id('age')).getText()).toBe('23');
});
