const { Builder, By, Key } = require('selenium-webdriver');

it.only('drags a card', async () => {
  const browser = await new Builder().forBrowser('chrome').build();
  await browser.get('http://kanban.local/board');
  const card = await browser.findElement(By.css('.card:first-child'));
  const lane = await browser.findElement(By.css('.lane.done'));
  await browser.actions({ async: true }).dragAndDrop(card, lane).perform();
  await card.click();
  await browser.findElement(By.css('.title')).sendKeys(Key.chord(Key.CONTROL, 'a'), 'Renamed');
  await browser.findElement(By.css('form')).submit();
  expect(await lane.findElements(By.css('.card'))).toHaveLength(1);
});
