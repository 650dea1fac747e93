const { By } = require('selenium-webdriver');

it('handles ünïcödé — and emoji 🎉', async () => {
  await driver.get('http://localhost:5000/çafé');
  await driver.findElement(By.xpath("//button[text()='Ôk']")).click();
  const label = await driver.findElement(By.id('greeting')).getText();
  expect(label).toBe('こんにちは');
});
