const { Builder, By } = require('selenium-webdriver');

async function login(driver, user) {
  await driver.findElement(By.id('user')).sendKeys(user);
  await driver.findElement(By.id('go')).click();
}

function syncHelper(driver) {
  return driver.findElement(By.id('x'));
}

describe('cart', () => {
  it('adds to cart after login', async () => {
    const driver = await new Builder().forBrowser('chrome').build();
    await driver.get('http://shop.local');
    await login(driver, 'bob');
    const add = async () => {
      await driver.findElement(By.css('.add')).click();
    };
    await add();
    await driver.executeScript('window.scrollTo(0, document.body.scrollHeight)');
    const count = await driver.findElement(By.css('.cart-count')).getText();
    expect(Number(count)).toBe(1);
  });
});
